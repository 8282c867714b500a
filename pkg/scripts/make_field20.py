"""Regenerate the shipped 20-door field suite (src/doorloop/data/suite_field20.yaml)."""
import math
import sys
from pathlib import Path

from doorloop.common import HingeSide as H, Swing as S, UnlockDirection as D
from doorloop.suite import dump_suite, make_cabinet, make_crossbar, make_door, make_knob, make_lever


def facing(deg, dist=3.0, z=1.0):
    a = math.radians(deg)
    n = (math.cos(a), math.sin(a), 0.0)
    return dict(origin=(-dist * n[0], -dist * n[1], z), normal=n)


def field20():
    doors = []
    crossbars = [  # (anchor, width, height, swing, hinge, heading deg, outliers)
        ((250, 200), 140, 70, S.PUSH, H.LEFT, 0, 0.10),
        ((240, 210), 160, 60, S.PUSH, H.RIGHT, 90, 0.20),
        ((260, 190), 120, 80, S.PULL, H.LEFT, 180, 0.05),
        ((245, 205), 150, 55, S.PUSH, H.RIGHT, -90, 0.30),
        ((255, 200), 130, 75, S.PULL, H.RIGHT, 45, 0.15),
    ]
    for i, (anchor, w, h, swing, hinge, deg, out) in enumerate(crossbars, 1):
        doors.append(make_door(f"crossbar-{i:02d}", make_crossbar(anchor, w, h), swing=swing, hinge_side=hinge,
                               outlier_fraction=out, **facing(deg)))

    levers = [  # (axis, length, direction, swing, hinge, unlock, slack, heading)
        ((480, 240), 60, D.CW, S.PULL, H.LEFT, 0.70, 0.05, 10),
        ((165, 230), 55, D.CCW, S.PUSH, H.RIGHT, 0.60, 0.04, 100),
        ((470, 250), 70, D.CCW, S.PULL, H.LEFT, 0.80, 0.06, -30),
        ((170, 245), 50, D.CW, S.PUSH, H.RIGHT, 0.55, 0.05, 200),
        ((490, 235), 65, D.CW, S.PUSH, H.LEFT, 0.75, 0.08, 60),
    ]
    for i, (axis, L, d, swing, hinge, ua, sl, deg) in enumerate(levers, 1):
        lever = make_lever(axis, L, d, points_left=hinge is H.LEFT, unlock_angle_rad=ua, slack_rad=sl)
        doors.append(make_door(f"lever-{i:02d}", lever, swing=swing, hinge_side=hinge,
                               outlier_fraction=0.05 * i, **facing(deg)))

    knobs = [  # (center, radius, direction, swing, hinge, unlock, heading)
        ((490, 240), 0.025, D.CW, S.PULL, H.LEFT, 0.90, 20),
        ((150, 240), 0.030, D.CCW, S.PUSH, H.RIGHT, 1.00, -60),
        ((480, 250), 0.025, D.EITHER, S.PULL, H.LEFT, 0.80, 135),
        ((160, 230), 0.028, D.CW, S.PUSH, H.RIGHT, 0.85, -150),
        ((495, 245), 0.022, D.CCW, S.PULL, H.LEFT, 0.95, 75),
    ]
    for i, (c, r, d, swing, hinge, ua, deg) in enumerate(knobs, 1):
        doors.append(make_door(f"knob-{i:02d}", make_knob(c, r, d, unlock_angle_rad=ua), swing=swing,
                               hinge_side=hinge, outlier_fraction=0.04 * i, **facing(deg)))

    drawers = [((320, 240), 90, 0.35, 0.6, 0.25, 30), ((320, 235), 70, 0.40, 0.5, 0.22, -120),
               ((320, 245), 100, 0.30, 0.7, 0.30, 160)]
    for i, (c, w, ext, width, height, deg) in enumerate(drawers, 1):
        doors.append(make_door(f"cabinet-{i:02d}", make_cabinet(c, w), swing=S.SLIDE, width_m=width,
                               height_m=height, max_extension_m=ext, outlier_fraction=0.1,
                               **facing(deg, z=0.9)))
    cabinets = [((430, 240), 60, S.PULL, H.LEFT, -10), ((215, 250), 50, S.PULL, H.RIGHT, 110)]
    for i, (c, w, swing, hinge, deg) in enumerate(cabinets, 4):
        doors.append(make_door(f"cabinet-{i:02d}", make_cabinet(c, w), swing=swing, hinge_side=hinge,
                               width_m=0.5, height_m=0.7, outlier_fraction=0.1, **facing(deg, z=1.0)))
    return doors


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        Path(__file__).resolve().parents[1] / "src" / "doorloop" / "data" / "suite_field20.yaml"
    header = ("# 20 synthetic doors: 5 crossbar, 5 lever, 5 knob, 5 cabinet/drawer.\n"
              "# Generated by scripts/make_field20.py; pixel geometry is in the 640x480\n"
              "# door-camera image (focal 525 px, principal point at the center).\n")
    out.write_text(header + dump_suite(field20()))
    print(f"wrote {out}")
