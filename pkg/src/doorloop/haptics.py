"""Haptic channel: joint-current and gripper-resistance interpretation.

Turns raw current streams into the discrete events the primitives act on:
rotation limits (a current spike on the elbow, joint index 4), collisions,
lost contact, and push/pull door classification from a short probe pull.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .common import Resistance, Swing

ELBOW = 4
CSV_HEADER = ("t_s", "c0", "c1", "c2", "c3", "c4", "c5", "c6", "resistance")


@dataclass(frozen=True, slots=True)
class HapticSample:
    t_s: float
    joint_currents_A: np.ndarray
    gripper_resistance: Resistance

    @property
    def elbow_A(self) -> float:
        return float(self.joint_currents_A[ELBOW])


class HapticTrace:
    """Time-ordered list of samples with CSV round-tripping."""

    def __init__(self, samples: Iterable[HapticSample] = ()):
        self.samples: list[HapticSample] = []
        for s in samples:
            self.append(s)

    def append(self, sample: HapticSample) -> None:
        if self.samples and sample.t_s <= self.samples[-1].t_s:
            raise ValueError("haptic samples must have increasing timestamps")
        if not np.all(np.isfinite(sample.joint_currents_A)):
            raise ValueError("non-finite joint current")
        self.samples.append(sample)

    def extend(self, other: "HapticTrace") -> None:
        for s in other.samples:
            self.append(s)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[HapticSample]:
        return iter(self.samples)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return HapticTrace(self.samples[idx])
        return self.samples[idx]

    def times(self) -> np.ndarray:
        return np.array([s.t_s for s in self.samples])

    def elbow(self) -> np.ndarray:
        return np.array([s.joint_currents_A[ELBOW] for s in self.samples])

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for s in self.samples:
            writer.writerow([repr(float(s.t_s)), *(repr(float(c)) for c in s.joint_currents_A),
                             s.gripper_resistance.value])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "HapticTrace":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_HEADER:
            raise ValueError(f"expected header {','.join(CSV_HEADER)}")
        samples = []
        for row in rows[1:]:
            samples.append(HapticSample(float(row[0]), np.array([float(c) for c in row[1:8]]),
                                        Resistance(row[8])))
        return cls(samples)


class EventKind(str, enum.Enum):
    ROTATION_LIMIT = "RotationLimit"
    COLLISION_SPIKE = "CollisionSpike"
    CONTACT_LOST = "ContactLost"
    PUSH_DETECTED = "PushDetected"
    PULL_DETECTED = "PullDetected"
    NOMINAL = "Nominal"


@dataclass(frozen=True)
class HapticEvent:
    kind: EventKind
    t_s: float
    evidence_A: float = 0.0


class LimitDetector:
    """Debounced threshold detector over the elbow current.

    Fires once the elbow current has been strictly above ``threshold_A`` for
    ``window`` consecutive samples.  Fed one sample at a time so primitives
    can stop the arm the moment it fires.
    """

    def __init__(self, threshold_A: float, window: int = 3, kind: EventKind = EventKind.ROTATION_LIMIT):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.threshold_A = threshold_A
        self.window = window
        self.kind = kind
        self._run = 0

    def reset(self) -> None:
        self._run = 0

    def update(self, sample: HapticSample) -> HapticEvent | None:
        current = sample.joint_currents_A[ELBOW]
        if current > self.threshold_A:
            self._run += 1
            if self._run >= self.window:
                return HapticEvent(self.kind, sample.t_s, float(current))
        else:
            self._run = 0
        return None


def detect_rotation_limit(trace: HapticTrace, threshold_A: float, window: int = 3) -> HapticEvent:
    """First debounced elbow-current limit event in ``trace``, or Nominal."""
    detector = LimitDetector(threshold_A, window)
    for sample in trace:
        event = detector.update(sample)
        if event is not None:
            return event
    t_end = trace[-1].t_s if len(trace) else 0.0
    return HapticEvent(EventKind.NOMINAL, t_end)


def detect_contact_lost(sample: HapticSample) -> bool:
    return sample.gripper_resistance is Resistance.LOW


def classify_push_pull(trace: HapticTrace, baseline_A: float, delta_threshold_A: float) -> Swing | None:
    """Classify door swing from the elbow current of a backward probe pull.

    Uses the second half of the probe.  A push door resists the pull, so the
    current climbs above ``baseline_A + delta_threshold_A``; a pull door
    follows and the current stays within ``delta_threshold_A`` of the
    baseline.  A second half whose spread exceeds the band is not trusted.

    Returns ``Swing.PUSH``, ``Swing.PULL`` or ``None`` (inconclusive).
    """
    elbow = trace.elbow()
    if len(elbow) < 2:
        return None
    tail = elbow[len(elbow) // 2:]
    mean = float(tail.mean())
    spread = float(tail.std())
    if spread > delta_threshold_A:
        return None
    if mean > baseline_A + delta_threshold_A:
        return Swing.PUSH
    if abs(mean - baseline_A) <= delta_threshold_A:
        return Swing.PULL
    return None


def swing_event(swing: Swing | None, t_s: float, evidence_A: float) -> HapticEvent:
    if swing is Swing.PUSH:
        return HapticEvent(EventKind.PUSH_DETECTED, t_s, evidence_A)
    if swing is Swing.PULL:
        return HapticEvent(EventKind.PULL_DETECTED, t_s, evidence_A)
    return HapticEvent(EventKind.NOMINAL, t_s, evidence_A)
