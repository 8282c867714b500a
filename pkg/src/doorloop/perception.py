"""Door-plane estimation and grasp refinement.

Camera intrinsics are the fixed virtual ones from :mod:`doorloop.camera`
(640x480, focal 525 px, principal point at the image center).  Everything
here works in that camera frame: x right, y down, z forward.

Grasp refinement sits behind one interface, ``refine_grasp(observation,
handle_type)``, returning a pixel offset from the mask centroid and a signed
rotation parameter R (sign = unlock sense, see :data:`doorloop.common.CCW_SIGN`;
magnitude = rotation radius in meters).  Two models ship:

* :class:`CentroidBaseline` grasps the mask centroid with a fixed radius prior.
* :class:`GeometricOracle` picks a point on the handle skeleton from mask
  geometry and reads the unlock sense from ground truth, flipped with a
  configurable probability to mimic an imperfect visual guess.

A learned model can replace either as long as it honours the same call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from . import camera
from .common import HandleType, UnlockDirection, sign_for_direction
from .world import Observation


class Degenerate(ValueError):
    pass


class TooFewPoints(ValueError):
    pass


class EmptyMask(ValueError):
    pass


class BehindCamera(ValueError):
    pass


@dataclass(frozen=True)
class PlaneFit:
    normal: np.ndarray
    offset_m: float
    inlier_count: int
    inlier_threshold_m: float

    def distance(self, points: np.ndarray) -> np.ndarray:
        return np.abs(points @ self.normal - self.offset_m)

    def depth_along_axis(self) -> float:
        """Distance from the camera to the plane along the optical axis."""
        nz = self.normal[2]
        return self.offset_m / nz if abs(nz) > 1e-12 else math.inf


def ransac_plane(cloud: np.ndarray, inlier_threshold_m: float, iterations: int,
                 seed: int | np.random.Generator) -> PlaneFit:
    """Robust plane fit: best sampled triple by inlier count, then an
    eigenvector least-squares refit on its inliers.

    The returned normal points toward the camera (negative z component).
    """
    pts = np.asarray(cloud, dtype=float)
    n = len(pts)
    if n < 3:
        raise TooFewPoints(f"need at least 3 points, got {n}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    # distinct index triples without rejection loops
    i = rng.integers(0, n, iterations)
    j = rng.integers(0, n - 1, iterations)
    j = j + (j >= i)
    k = rng.integers(0, n - 2, iterations)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    k = k + (k >= lo)
    k = k + (k >= hi)

    p0 = pts[i]
    normals = np.cross(pts[j] - p0, pts[k] - p0)
    norms = np.linalg.norm(normals, axis=1)
    scale = np.ptp(pts, axis=0).max() or 1.0
    valid = norms > 1e-12 * scale * scale
    if not valid.any():
        raise Degenerate("every sampled triple was collinear")
    normals = normals[valid] / norms[valid, None]
    offsets = np.einsum("ij,ij->i", normals, p0[valid])
    counts = (np.abs(pts @ normals.T - offsets) <= inlier_threshold_m).sum(axis=0)
    best = int(np.argmax(counts))
    inliers = pts[np.abs(pts @ normals[best] - offsets[best]) <= inlier_threshold_m]

    centroid = inliers.mean(axis=0)
    _, _, vt = np.linalg.svd(inliers - centroid)
    normal = vt[-1]
    if normal[2] > 0 or (normal[2] == 0 and normal @ centroid > 0):
        normal = -normal
    offset = float(normal @ centroid)
    count = int((np.abs(pts @ normal - offset) <= inlier_threshold_m).sum())
    return PlaneFit(normal=normal, offset_m=offset, inlier_count=count,
                    inlier_threshold_m=inlier_threshold_m)


@dataclass(frozen=True)
class GraspPrediction:
    dx_px: float
    dy_px: float
    rotation_param_R: float

    @property
    def radius_m(self) -> float:
        return abs(self.rotation_param_R)


@dataclass(frozen=True)
class GraspPose:
    position_m: np.ndarray
    orientation: np.ndarray  # quaternion (x, y, z, w)
    approach_axis: np.ndarray
    closing_axis: np.ndarray


def mask_skeleton(mask_px: np.ndarray, thin_fraction: float = 0.5) -> np.ndarray:
    """Centerline points of the thin parts of a mask.

    For every image column and row, each run of mask pixels shorter than
    ``thin_fraction`` times the larger bounding-box side contributes its
    midpoint.  Bars give their centerline; blobs give nothing.
    """
    if len(mask_px) == 0:
        return np.empty((0, 2))
    u0, v0 = mask_px.min(axis=0)
    w, h = mask_px.max(axis=0) - (u0, v0) + 1
    grid = np.zeros((h, w), dtype=bool)
    grid[mask_px[:, 1] - v0, mask_px[:, 0] - u0] = True
    limit = thin_fraction * max(w, h)
    out = []
    for axis in (0, 1):
        lines = grid.T if axis == 0 else grid  # columns first, then rows
        for idx, line in enumerate(lines):
            padded = np.concatenate([[False], line, [False]])
            edges = np.flatnonzero(padded[1:] != padded[:-1])
            for start, stop in zip(edges[::2], edges[1::2]):
                if stop - start < limit:
                    mid = (start + stop - 1) / 2.0
                    out.append((u0 + idx, v0 + mid) if axis == 0 else (u0 + mid, v0 + idx))
    return np.array(out, dtype=float).reshape(-1, 2)


def _depth_estimate(observation: Observation, plane: PlaneFit | None) -> float:
    if plane is not None:
        return plane.depth_along_axis()
    return float(np.median(observation.cloud_m[:, 2]))


class CentroidBaseline:
    """Grasp at the mask centroid; fixed positive radius prior."""

    def __init__(self, prior_radius_m: float = 0.06):
        self.prior_radius_m = prior_radius_m

    def refine_grasp(self, observation: Observation, handle_type: HandleType,
                     plane: PlaneFit | None = None) -> GraspPrediction:
        if observation.mask_area == 0:
            raise EmptyMask("no handle pixels")
        return GraspPrediction(0.0, 0.0, self.prior_radius_m)


class GeometricOracle:
    """Mask-geometry grasp point plus a noisy ground-truth unlock sense.

    ``direction_draw`` is one uniform draw per episode; the true sense is
    reported when ``accuracy`` exceeds it and flipped otherwise.
    """

    def __init__(self, true_direction: UnlockDirection, accuracy: float = 0.8,
                 direction_draw: float = 0.0, thin_fraction: float = 0.5):
        self.true_direction = true_direction
        self.accuracy = accuracy
        self.direction_draw = direction_draw
        self.thin_fraction = thin_fraction

    @property
    def direction_correct(self) -> bool:
        return self.accuracy > self.direction_draw

    def grasp_point(self, observation: Observation, handle_type: HandleType) -> tuple[float, float]:
        if observation.mask_area == 0:
            raise EmptyMask("no handle pixels")
        if handle_type in (HandleType.LEVER, HandleType.CROSSBAR):
            skel = mask_skeleton(observation.mask_px, self.thin_fraction)
            if len(skel):
                dist2 = ((skel - np.asarray(observation.rotation_axis_px)) ** 2).sum(axis=1)
                u, v = skel[int(np.argmax(dist2))]
                return float(u), float(v)
        return observation.centroid_px

    def refine_grasp(self, observation: Observation, handle_type: HandleType,
                     plane: PlaneFit | None = None) -> GraspPrediction:
        gu, gv = self.grasp_point(observation, handle_type)
        cu, cv = observation.centroid_px
        pitch = camera.pixel_pitch(_depth_estimate(observation, plane))
        if handle_type is HandleType.KNOB:
            radius = math.sqrt(observation.mask_area / math.pi) * pitch
        elif handle_type is HandleType.CABINET:
            radius = 0.0
        else:
            au, av = observation.rotation_axis_px
            radius = math.hypot(gu - au, gv - av) * pitch
        sign = sign_for_direction(self.true_direction)
        if not self.direction_correct:
            sign = -sign
        return GraspPrediction(gu - cu, gv - cv, sign * radius)


def refine_grasp(observation: Observation, handle_type: HandleType, model,
                 plane: PlaneFit | None = None) -> GraspPrediction:
    return model.refine_grasp(observation, handle_type, plane)


def minor_axis_px(mask_px: np.ndarray) -> np.ndarray:
    """Unit (du, dv) along the mask's minor principal axis."""
    pts = mask_px.astype(float)
    if len(pts) < 2:
        return np.array([0.0, 1.0])
    cov = np.cov(pts.T)
    vals, vecs = np.linalg.eigh(cov)
    axis = vecs[:, 0]
    if abs(vals[1] - vals[0]) <= 1e-9 * max(vals[1], 1.0):
        axis = np.array([0.0, 1.0])
    return axis if axis[np.argmax(np.abs(axis))] > 0 else -axis


def grasp_pose_from_prediction(pred: GraspPrediction, plane: PlaneFit,
                               observation: Observation) -> GraspPose:
    """Back-project the refined grasp pixel onto the fitted plane (camera frame)."""
    cu, cv = observation.centroid_px
    u, v = cu + pred.dx_px, cv + pred.dy_px
    ray = camera.pixel_ray(u, v)
    denom = float(plane.normal @ ray)
    if abs(denom) < 1e-12:
        raise BehindCamera("grasp ray parallel to the door plane")
    t = plane.offset_m / denom
    if not t > 0:
        raise BehindCamera("door plane behind the camera along the grasp ray")
    position = t * ray
    approach = -plane.normal / np.linalg.norm(plane.normal)
    du, dv = minor_axis_px(observation.mask_px)
    closing = np.array([du, dv, 0.0])
    closing = closing - (closing @ approach) * approach
    if np.linalg.norm(closing) < 1e-9:
        closing = np.cross(approach, [1.0, 0.0, 0.0])
    closing /= np.linalg.norm(closing)
    x_axis = np.cross(closing, approach)
    quat = Rotation.from_matrix(np.column_stack([x_axis, closing, approach])).as_quat()
    return GraspPose(position_m=position, orientation=quat, approach_axis=approach, closing_axis=closing)
