"""Discrete dynamic movement primitives.

Standard formulation with an exponential canonical system, gaussian basis
functions and a forcing term scaled by (goal - start)::

    tau * dz = alpha_z * (beta_z * (g - y) - z) + f(x) * (g - y0)
    tau * dy = z
    tau * dx = -alpha_x * x

Weights come from per-basis locally weighted regression on one
demonstration.  Rollouts use explicit Euler with dt = tau / steps.  The
forcing term is switched off once the canonical variable drops below
``FORCING_CUTOFF`` so the tail is a pure critically damped spring.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FORCING_CUTOFF = 1e-4
WIDTH_FACTOR = 8.0
ALPHA_X = 4.0


class DegenerateDemo(ValueError):
    """Start equals goal in every dimension; use a straight-line fallback."""


@dataclass(frozen=True)
class DmpParams:
    basis_count: int
    alpha_z: float
    beta_z: float
    alpha_x: float
    weights: np.ndarray  # (dims, basis_count)
    tau_s: float
    start: np.ndarray
    goal: np.ndarray

    def __post_init__(self):
        if self.basis_count < 2:
            raise ValueError("basis_count must be >= 2")
        if self.tau_s <= 0:
            raise ValueError("tau_s must be positive")
        if not np.isclose(self.beta_z, self.alpha_z / 4.0):
            raise ValueError("beta_z must equal alpha_z / 4 (critical damping)")

    @property
    def dims(self) -> int:
        return len(self.start)

    def centers(self) -> np.ndarray:
        return np.exp(-self.alpha_x * np.linspace(0.0, 1.0, self.basis_count))

    def widths(self) -> np.ndarray:
        c = self.centers()
        gaps = np.diff(c)
        # narrower than the usual 1/gap^2; reproduces much better with few bases
        return WIDTH_FACTOR / np.append(gaps, gaps[-1]) ** 2

    def forcing(self, x: np.ndarray | float) -> np.ndarray:
        """Normalized basis mix f(x) per dimension, shape (len(x), dims)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        psi = np.exp(-self.widths() * (x[:, None] - self.centers()) ** 2)
        mix = (psi @ self.weights.T) / psi.sum(axis=1, keepdims=True)
        f = mix * x[:, None]
        f[x < FORCING_CUTOFF] = 0.0
        return f


@dataclass(frozen=True)
class DmpRollout:
    y: np.ndarray      # (steps + 1, dims)
    yd: np.ndarray
    ydd: np.ndarray
    x: np.ndarray      # canonical variable, (steps + 1,)
    dt: float


def dmp_fit(demo: np.ndarray, dt: float, basis_count: int = 20, alpha_z: float = 25.0,
            alpha_x: float = ALPHA_X) -> DmpParams:
    demo = np.asarray(demo, dtype=float)
    if demo.ndim == 1:
        demo = demo[:, None]
    if len(demo) < 3:
        raise ValueError("demonstration needs at least 3 samples")
    start, goal = demo[0].copy(), demo[-1].copy()
    scale = goal - start
    if np.all(scale == 0):
        raise DegenerateDemo("start equals goal in every dimension")

    tau = (len(demo) - 1) * dt
    yd = np.gradient(demo, dt, axis=0)
    ydd = np.gradient(yd, dt, axis=0)
    beta_z = alpha_z / 4.0
    t = np.arange(len(demo)) * dt
    x = np.exp(-alpha_x * t / tau)
    f_target = tau ** 2 * ydd - alpha_z * (beta_z * (goal - demo) - tau * yd)

    proto = DmpParams(basis_count, alpha_z, beta_z, alpha_x,
                      np.zeros((demo.shape[1], basis_count)), tau, start, goal)
    psi = np.exp(-proto.widths() * (x[:, None] - proto.centers()) ** 2)  # (T, B)
    weights = np.zeros((demo.shape[1], basis_count))
    for d in range(demo.shape[1]):
        if scale[d] == 0:
            continue
        s = x * scale[d]
        num = (psi * (s * f_target[:, d])[:, None]).sum(axis=0)
        den = (psi * (s * s)[:, None]).sum(axis=0)
        weights[d] = np.divide(num, den, out=np.zeros_like(num), where=den > 1e-300)
    return DmpParams(basis_count, alpha_z, beta_z, alpha_x, weights, tau, start, goal)


def dmp_rollout(params: DmpParams, new_start=None, new_goal=None, steps: int = 500) -> DmpRollout:
    if steps < 2:
        raise ValueError("steps must be >= 2")
    y0 = np.array(params.start if new_start is None else new_start, dtype=float).reshape(params.dims)
    g = np.array(params.goal if new_goal is None else new_goal, dtype=float).reshape(params.dims)
    dt = params.tau_s / steps
    k = dt / params.tau_s
    # canonical trajectory and forcing do not depend on y: precompute
    x = (1.0 - params.alpha_x * k) ** np.arange(steps + 1)
    push = params.forcing(x) * (g - y0)
    az, bz = params.alpha_z, params.beta_z

    y = np.empty((steps + 1, params.dims))
    yd = np.empty_like(y)
    ydd = np.empty_like(y)
    yk, zk = y0.copy(), np.zeros(params.dims)
    for n in range(steps + 1):
        dz = az * (bz * (g - yk) - zk) + push[n]
        y[n], yd[n], ydd[n] = yk, zk / params.tau_s, dz / params.tau_s ** 2
        yk = yk + zk * k
        zk = zk + dz * k
    return DmpRollout(y=y, yd=yd, ydd=ydd, x=x, dt=dt)


def minimum_jerk(start, goal, samples: int) -> np.ndarray:
    start, goal = np.atleast_1d(np.asarray(start, float)), np.atleast_1d(np.asarray(goal, float))
    s = np.linspace(0.0, 1.0, samples)[:, None]
    return start + (goal - start) * (10 * s ** 3 - 15 * s ** 4 + 6 * s ** 5)


@lru_cache(maxsize=1)
def default_reach() -> DmpParams:
    """Built-in grasp-reach primitive.

    A 3-D minimum-jerk line over 0.7 s followed by a 0.3 s hold, so the
    learned forcing is already near zero when the rollout horizon ends.
    """
    line = minimum_jerk([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], 141)
    demo = np.vstack([line, np.ones((60, 3))])
    return dmp_fit(demo, dt=1.0 / 200, basis_count=20)
