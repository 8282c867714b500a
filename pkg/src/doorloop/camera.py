"""Fixed virtual pinhole camera.

All pixel geometry is expressed in one 640x480 image with a 525 px focal
length and the principal point at the image center.  The camera frame is
x right, y down, z forward (optical axis).

The camera is anchored to the door leaf: it sits ``view_distance_m`` in
front of the leaf origin, looking straight at it.  Its extrinsics are known
to the robot, so anything estimated in the camera frame can be moved to the
world frame.
"""
from __future__ import annotations

import numpy as np

IMAGE_WIDTH = 640
IMAGE_HEIGHT = 480
FOCAL_PX = 525.0
CX = IMAGE_WIDTH / 2.0
CY = IMAGE_HEIGHT / 2.0


def in_image(u: float, v: float) -> bool:
    return 0.0 <= u < IMAGE_WIDTH and 0.0 <= v < IMAGE_HEIGHT


def pixel_ray(u: float, v: float) -> np.ndarray:
    """Unnormalized ray direction through pixel (u, v), with z = 1."""
    return np.array([(u - CX) / FOCAL_PX, (v - CY) / FOCAL_PX, 1.0])


def project(point_cam: np.ndarray) -> tuple[float, float]:
    x, y, z = point_cam
    return CX + FOCAL_PX * x / z, CY + FOCAL_PX * y / z


def pixel_pitch(depth_m: float) -> float:
    """Meters per pixel on a fronto-parallel plane at ``depth_m``."""
    return depth_m / FOCAL_PX
