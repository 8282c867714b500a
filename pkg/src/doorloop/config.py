"""Configuration dataclasses and the shipped default config file."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorldConfig:
    dt_s: float
    current_gain_A_per_Nm: float
    handle_stiffness_Nm_per_rad: float
    door_resist_stiffness_N_per_m: float
    elbow_lever_arm_m: float
    current_noise_sigma_A: float
    current_threshold_A: float
    free_current_A: tuple[float, ...]
    hard_stop_reference_overshoot_rad: float
    workspace_box_m: tuple[tuple[float, float], ...]
    ee_home_m: tuple[float, float, float]
    view_distance_m: float
    view_cone_half_angle_rad: float
    view_max_distance_m: float
    fov_half_angle_rad: float
    depth_capture_tolerance_m: float
    arc_slip_tolerance_m: float
    handle_thickness_m: float
    cloud_points: int
    outlier_box_m: float
    obstruction_torque_Nm: float
    obstruction_steps: int
    base_slip_m: float
    grasp_short_m: float

    @property
    def elbow_free_current_A(self) -> float:
        return self.free_current_A[4]

    def hard_stop_current_A(self, overshoot_rad: float) -> float:
        """Noise-free elbow current for a handle pushed ``overshoot_rad`` past its stop."""
        torque = self.handle_stiffness_Nm_per_rad * abs(overshoot_rad)
        return self.elbow_free_current_A + self.current_gain_A_per_Nm * torque

    def check(self) -> None:
        if self.dt_s <= 0:
            raise ConfigError("dt_s must be positive")
        if len(self.free_current_A) != 7:
            raise ConfigError("free_current_A needs one entry per joint (7)")
        if len(self.workspace_box_m) != 3 or any(lo >= hi for lo, hi in self.workspace_box_m):
            raise ConfigError("workspace_box_m must be three increasing intervals")
        margin = 3.0 * self.current_noise_sigma_A
        free_max = max(self.free_current_A) + margin
        stop_min = self.hard_stop_current_A(self.hard_stop_reference_overshoot_rad) - margin
        if not free_max < self.current_threshold_A < stop_min:
            raise ConfigError(
                f"current threshold {self.current_threshold_A} A not separable: "
                f"free-motion max {free_max:.3f} A, hard-stop min {stop_min:.3f} A"
            )


@dataclass(frozen=True)
class PerceptionConfig:
    ransac_iterations: int
    ransac_threshold_m: float
    direction_prior_accuracy: float
    centroid_prior_radius_m: float
    thin_fraction: float

    def check(self) -> None:
        if self.ransac_iterations < 1:
            raise ConfigError("ransac_iterations must be >= 1")
        if not 0.0 <= self.direction_prior_accuracy <= 1.0:
            raise ConfigError("direction_prior_accuracy must be in [0, 1]")


@dataclass(frozen=True)
class PrimitiveConfig:
    approach_offset_m: float
    base_speed_m_s: float
    base_turn_rate_rad_s: float
    scan_step_rad: float
    max_scans: int
    pregrasp_offset_m: float
    dmp_steps: int
    reach_waypoints: int
    rotation_speed_rad_s: float
    unlock_min_travel_rad: float
    limit_window: int
    collision_factor: float
    hazard_factor: float
    baseline_samples: int
    probe_distance_m: float
    probe_speed_m_s: float
    push_pull_delta_A: float
    open_speed_m_s: float
    open_target_angle_rad: float
    traverse_distance_m: float
    pull_traverse_steps: int
    swing_classifier: str
    contact_loss_prob: dict[str, float] = field(default_factory=dict)
    step_budget: dict[str, int] = field(default_factory=dict)

    def check(self) -> None:
        from .common import PrimitiveId

        names = {p.value for p in PrimitiveId}
        if set(self.step_budget) != names:
            raise ConfigError(f"step_budget must list exactly {sorted(names)}")
        if not set(self.contact_loss_prob) <= names:
            raise ConfigError("contact_loss_prob keys must be primitive names")
        if self.swing_classifier not in ("haptic", "coin"):
            raise ConfigError("swing_classifier must be 'haptic' or 'coin'")
        if self.limit_window < 1:
            raise ConfigError("limit_window must be >= 1")
        if self.collision_factor <= 1.0:
            raise ConfigError("collision_factor must exceed 1")


@dataclass(frozen=True)
class PlannerConfig:
    retry_budget: dict[str, int] = field(default_factory=dict)

    def check(self) -> None:
        from .common import PrimitiveId

        names = {p.value for p in PrimitiveId}
        if set(self.retry_budget) != names:
            raise ConfigError(f"retry_budget must list exactly {sorted(names)}")
        if any(v < 0 for v in self.retry_budget.values()):
            raise ConfigError("retry budgets must be non-negative")


@dataclass(frozen=True)
class Config:
    world: WorldConfig
    perception: PerceptionConfig
    primitives: PrimitiveConfig
    planner: PlannerConfig

    def digest(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **sections: dict[str, Any]) -> "Config":
        """Copy with per-section overrides, e.g. ``cfg.replace(world={"dt_s": 0.01})``."""
        parts = {}
        for f in dataclasses.fields(self):
            section = getattr(self, f.name)
            overrides = sections.pop(f.name, None)
            parts[f.name] = dataclasses.replace(section, **overrides) if overrides else section
        if sections:
            raise ConfigError(f"unknown config sections: {sorted(sections)}")
        out = Config(**parts)
        out.check()
        return out

    def check(self) -> None:
        self.world.check()
        self.perception.check()
        self.primitives.check()
        self.planner.check()


def _tupleize(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_tupleize(v) for v in value)
    return value


def _build(cls, raw: dict, section: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{section}' must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")
    missing = {f.name for f in dataclasses.fields(cls)
               if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING} - set(raw)
    if missing:
        raise ConfigError(f"missing keys in '{section}': {sorted(missing)}")
    return cls(**{k: _tupleize(v) for k, v in raw.items()})


def config_from_dict(raw: dict) -> Config:
    sections = {"world": WorldConfig, "perception": PerceptionConfig,
                "primitives": PrimitiveConfig, "planner": PlannerConfig}
    unknown = set(raw) - set(sections)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    cfg = Config(**{name: _build(cls, raw.get(name, {}), name) for name, cls in sections.items()})
    cfg.check()
    return cfg


def load_config(path: str | Path | None = None) -> Config:
    """Load a config file; ``None`` loads the shipped defaults."""
    if path is None:
        text = resources.files("doorloop").joinpath("data/default_config.yaml").read_text()
    else:
        text = Path(path).read_text()
    return config_from_dict(yaml.safe_load(text) or {})


_DEFAULT: Config | None = None


def default_config() -> Config:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_config()
    return _DEFAULT
