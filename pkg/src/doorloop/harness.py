"""Experiment runner: suites of episodes, success tables, open-loop baseline, replay."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .common import (ErrorCode, HandleType, PrimitiveId, Swing, UnlockDirection, ROTATING_HANDLES,
                     sign_for_direction)
from .config import Config, default_config
from .perception import CentroidBaseline, GeometricOracle
from .planner import EpisodeRecord, run_episode, swing_truth
from .primitives import (EpisodeContext, FaultInjection, _Session, approach, execute_probe, grasp,
                         rotate_until_limit)
from .suite import door_digest, gen_suite, load_suite
from .world import DoorSpec, EndEffectorCommand, World

METHODS = ("closed-oracle", "closed-centroid", "open-random")
CSV_COLUMNS = ("method", "handle_type", "successes", "trials", "rate")

# Five lever and crossbar doors from suite_field20 used for the ablation
# tables.  Picked once by seed from the ten candidates and then frozen.
ABLATION_SUBSET = ("crossbar-02", "crossbar-04", "lever-01", "lever-03", "crossbar-05")


class RecordParseError(ValueError):
    pass


class ReplayMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class SuiteConfig:
    suite_path: str = "suite_field20"
    trials_per_door: int = 5
    seed: int = 0
    method: str = "closed-oracle"
    faults: tuple[FaultInjection, ...] = ()
    parallel_workers: int = 1
    door_ids: tuple[str, ...] | None = None
    config: Config | None = None

    def __post_init__(self):
        if self.trials_per_door < 1:
            raise ValueError("trials_per_door must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.parallel_workers < 1:
            raise ValueError("parallel_workers must be >= 1")


# --------------------------------------------------------------------------
# episode construction


def _streams(seed) -> dict[str, np.random.Generator]:
    ss = np.random.SeedSequence(list(seed) if isinstance(seed, (list, tuple)) else int(seed))
    names = ("world", "perception", "faults", "openloop", "coin", "start")
    return {n: np.random.default_rng(s) for n, s in zip(names, ss.spawn(len(names)))}


def start_pose(door: DoorSpec, cfg: Config, rng: np.random.Generator) -> tuple[float, float, float]:
    """Random start in front of the door, inside the viewing cone; heading may need a scan."""
    world = World(door, cfg.world, 0)
    target = world.handle_world_point()
    n = np.asarray(door.plane_normal)
    lateral = np.array([-n[1], n[0]])
    d = rng.uniform(1.2, 2.5)
    off = rng.uniform(-0.6, 0.6)
    x, y = target[0] + d * n[0] + off * lateral[0], target[1] + d * n[1] + off * lateral[1]
    facing = math.atan2(target[1] - y, target[0] - x)
    return x, y, facing + rng.uniform(-1.2, 1.2)


def build_context(door: DoorSpec, seed, cfg: Config, method: str = "closed-oracle") -> EpisodeContext:
    rngs = _streams(seed)
    world = World(door, cfg.world, rngs["world"], base_pose=start_pose(door, cfg, rngs["start"]))
    pc = cfg.perception
    true_dir = door.handle.unlock_direction
    guess_draw = rngs["openloop"].uniform()
    swing_guess = Swing.PUSH if rngs["openloop"].uniform() < 0.5 else Swing.PULL
    coin = Swing.PUSH if rngs["coin"].uniform() < 0.5 else Swing.PULL
    if method == "closed-oracle":
        model = GeometricOracle(true_dir, pc.direction_prior_accuracy, rngs["perception"].uniform(),
                                pc.thin_fraction)
    elif method == "closed-centroid":
        rngs["perception"].uniform()
        model = CentroidBaseline(pc.centroid_prior_radius_m)
    elif method == "open-random":
        rngs["perception"].uniform()
        # accuracy 1/2 against a uniform draw is a fair coin for the direction
        model = GeometricOracle(true_dir, 0.5, guess_draw, pc.thin_fraction)
    else:
        raise ValueError(f"unknown method {method!r}")
    open_loop = method == "open-random"
    return EpisodeContext(world=world, cfg=cfg, model=model, adaptive=not open_loop,
                          swing_guess=swing_guess if open_loop else coin,
                          rng_perception=rngs["perception"], rng_faults=rngs["faults"])


def episode(door: DoorSpec, seed, cfg: Config, method: str,
            injections: tuple[FaultInjection, ...] = ()) -> EpisodeRecord:
    ctx = build_context(door, seed, cfg, method)
    rec = run_episode(door, list(seed), cfg, ctx, method=method, injections=injections)
    rec.door_digest = door_digest(door)
    rec.config_digest = cfg.digest()
    return rec


def _job(args) -> EpisodeRecord:
    door, seed, cfg, method, injections = args
    return episode(door, seed, cfg, method, injections)


def run_episodes(jobs: list, workers: int = 1) -> list[EpisodeRecord]:
    """Run (door, seed, cfg, method, injections) jobs; output order = input order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


# --------------------------------------------------------------------------
# suites and tables


@dataclass
class SuiteResult:
    method: str
    records: list[EpisodeRecord]
    doors: list[DoorSpec]
    rows: list[dict] = field(default_factory=list)

    def to_csv(self) -> str:
        return table_csv(self.rows)


def _select(doors: list[DoorSpec], ids) -> list[DoorSpec]:
    if ids is None:
        return doors
    by_id = {d.id: d for d in doors}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise KeyError(f"door ids not in suite: {missing}")
    return [by_id[i] for i in ids]


def suite_jobs(doors: list[DoorSpec], sc: SuiteConfig, cfg: Config, index_of: dict[str, int]) -> list:
    return [(door, [sc.seed, index_of[door.id], trial], cfg, sc.method, sc.faults)
            for door in doors for trial in range(sc.trials_per_door)]


def aggregate(method: str, doors: list[DoorSpec], records: list[EpisodeRecord]) -> list[dict]:
    types = {d.id: d.handle.handle_type for d in doors}
    counts: dict[HandleType, list[int]] = {}
    for rec in records:
        c = counts.setdefault(types[rec.door_id], [0, 0])
        c[0] += int(rec.success)
        c[1] += 1
    rows = []
    for ht in HandleType:
        if ht in counts:
            s, n = counts[ht]
            rows.append({"method": method, "handle_type": ht.value, "successes": s, "trials": n,
                         "rate": Fraction(s, n)})
    if rows:
        s = sum(r["successes"] for r in rows)
        n = sum(r["trials"] for r in rows)
        rows.append({"method": method, "handle_type": "all", "successes": s, "trials": n,
                     "rate": Fraction(s, n)})
    return rows


def table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r["method"], r["handle_type"], r["successes"], r["trials"], f"{float(r['rate']):.4f}"])
    return buf.getvalue()


def table_markdown(rows_by_method: list[list[dict]]) -> str:
    cols = [ht.value for ht in HandleType] + ["all"]
    names = {"lever": "Lever", "knob": "Knob", "crossbar": "Crossbar", "cabinet": "Cabinet", "all": "Avg"}
    out = ["| Method | " + " | ".join(names[c] for c in cols) + " |",
           "|---" * (len(cols) + 1) + "|"]
    for rows in rows_by_method:
        if not rows:
            continue
        by = {r["handle_type"]: r for r in rows}
        cells = [f"{100 * float(by[c]['rate']):.0f}% ({by[c]['successes']}/{by[c]['trials']})"
                 if c in by else "-" for c in cols]
        out.append(f"| {rows[0]['method']} | " + " | ".join(cells) + " |")
    return "\n".join(out) + "\n"


def run_suite(sc: SuiteConfig) -> SuiteResult:
    cfg = sc.config or default_config()
    all_doors = load_suite(sc.suite_path)
    index_of = {d.id: i for i, d in enumerate(all_doors)}
    doors = _select(all_doors, sc.door_ids)
    records = run_episodes(suite_jobs(doors, sc, cfg, index_of), sc.parallel_workers)
    return SuiteResult(sc.method, records, doors, aggregate(sc.method, doors, records))


# --------------------------------------------------------------------------
# open loop


def openloop_expectation(door: DoorSpec) -> Fraction:
    """Success probability of one blind attempt: 1/2 per binary choice the robot must guess."""
    if door.locked:
        return Fraction(0)
    p = Fraction(1, 2)  # swing is always guessed
    h = door.handle
    if h.handle_type in ROTATING_HANDLES and h.unlock_direction in (UnlockDirection.CW, UnlockDirection.CCW):
        p /= 2
    return p


def binomial_band(p: float, n: int, k: float = 3.0) -> tuple[float, float]:
    sd = math.sqrt(p * (1 - p) / n)
    return p - k * sd, p + k * sd


def run_openloop(sc: SuiteConfig) -> tuple[SuiteResult, list[dict]]:
    """Open-loop baseline.  Returns the suite result and per-door rows with expectations."""
    if sc.method != "open-random":
        sc = SuiteConfig(**{**sc.__dict__, "method": "open-random"})
    result = run_suite(sc)
    per_door = []
    for door in result.doors:
        recs = [r for r in result.records if r.door_id == door.id]
        s = sum(r.success for r in recs)
        per_door.append({"door_id": door.id, "handle_type": door.handle.handle_type.value, "successes": s,
                         "trials": len(recs), "rate": Fraction(s, len(recs)),
                         "expected": openloop_expectation(door)})
    return result, per_door


def per_door_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("door_id", "handle_type", "successes", "trials", "rate", "expected"))
    for r in rows:
        w.writerow([r["door_id"], r["handle_type"], r["successes"], r["trials"],
                    f"{float(r['rate']):.4f}", f"{float(r['expected']):.4f}"])
    return buf.getvalue()


# --------------------------------------------------------------------------
# replay


def write_records(records: list[EpisodeRecord], directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for rec in records:
        p = d / f"{rec.door_id}_{rec.method}_s{'-'.join(map(str, rec.seed))}.json"
        p.write_text(rec.to_json())
        paths.append(p)
    return paths


def load_record(path: str | Path) -> tuple[EpisodeRecord, str]:
    try:
        text = Path(path).read_text()
        return EpisodeRecord.from_dict(json.loads(text)), text
    except OSError as exc:
        raise RecordParseError(f"{path}: {exc.strerror}") from None
    except (ValueError, TypeError, KeyError) as exc:
        raise RecordParseError(f"{path}: not an episode record ({exc})") from None


def replay(record_path: str | Path, suite_path: str = "suite_field20", cfg: Config | None = None,
           rerun: bool = True) -> str:
    """Text trace of a stored episode; optionally re-simulates it and demands identical bytes."""
    cfg = cfg or default_config()
    rec, text = load_record(record_path)
    doors = {d.id: d for d in load_suite(suite_path)}
    door = doors.get(rec.door_id)
    if door is None:
        raise ReplayMismatch(f"door {rec.door_id!r} is not in suite {suite_path}")
    if rec.door_digest and rec.door_digest != door_digest(door):
        raise ReplayMismatch(f"door {rec.door_id!r} differs from the one recorded "
                             f"(digest {door_digest(door)} != {rec.door_digest})")
    if rec.config_digest and rec.config_digest != cfg.digest():
        raise ReplayMismatch(f"config digest {cfg.digest()} != recorded {rec.config_digest}")
    lines = [f"door {rec.door_id}  method {rec.method}  seed {rec.seed}"]
    for o in rec.outcomes:
        lines.append(f"{o.state:<12} {o.result:<17} -> {o.next_state:<12} ({o.duration_steps} steps)")
        for e in o.events:
            lines.append(f"    t={e['t_s']:.2f}s {e['kind']:<15} {e['evidence_A']:.3f} A")
    lines.append(f"final door angle {rec.final_door_angle_rad:.4f} rad, extension {rec.final_extension_m:.4f} m, "
                 f"success {rec.success}")
    if rerun:
        injections = tuple(FaultInjection(ErrorCode(c), n) for c, n in rec.injections)
        again = episode(door, rec.seed, cfg, rec.method, injections)
        if again.to_json() != text:
            raise ReplayMismatch("re-simulation from the recorded seed does not reproduce the record")
        lines.append("re-run: identical")
    lines.append(rec.state_sequence[-1])
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# haptic audit


def haptic_audit(doors: list[DoorSpec], seeds, cfg: Config | None = None) -> list[dict]:
    """Check the haptic detectors against ground truth on real probes.

    For each door and seed: approach and grasp with the oracle, then
    * rotating handles: from rest, turn each way until the limit fires and
      check that (a) the handle is really against a stop, (b) the unlock
      inference from travel equals the world's latch state;
    * every solvable door: unlock the right way, probe, and compare the
      push/pull call with the door's swing.
    """
    cfg = cfg or default_config()
    rows = []
    for idx, door in enumerate(doors):
        for seed in seeds:
            ctx = build_context(door, [int(seed), idx, 0], cfg, "closed-oracle")
            ctx.model.direction_draw = 0.0  # audit the haptics, not the visual prior
            approach(ctx)
            g = grasp(ctx)
            if not g.ok:
                rows.append({"door": door.id, "seed": seed, "check": "grasp", "match": False,
                             "detail": g.result})
                continue
            w0 = ctx.world
            if door.handle.handle_type in ROTATING_HANDLES:
                for sign in (1.0, -1.0):
                    ctx.world = w0.copy()
                    s = _Session(ctx, PrimitiveId.UNLOCK_LEVER)
                    what, travel = rotate_until_limit(s, sign, abs(ctx.prediction.rotation_param_R))
                    d = ctx.world.door
                    lo, hi = ctx.world._limits
                    at_stop = d.handle_angle_rad in (lo, hi) and abs(d.rotation_overshoot_rad) > 0
                    inferred = travel >= cfg.primitives.unlock_min_travel_rad
                    rows.append({"door": door.id, "seed": seed, "check": "rotation_limit",
                                 "match": what == "limit" and at_stop and inferred == d.unlocked,
                                 "detail": f"{what} travel={travel:.3f} unlocked={d.unlocked}"})
            if door.locked:
                continue
            ctx.world = w0
            if door.handle.handle_type in ROTATING_HANDLES:
                s = _Session(ctx, PrimitiveId.UNLOCK_LEVER)
                rotate_until_limit(s, sign_for_direction(door.handle.unlock_direction),
                                   abs(ctx.prediction.rotation_param_R))
                s.step(EndEffectorCommand(relax=True))
            s = _Session(ctx, PrimitiveId.OPEN)
            base = [s.step() for _ in range(cfg.primitives.baseline_samples)]
            swing, _ = execute_probe(s, float(np.mean([b.elbow_A for b in base])))
            truth = swing_truth(door)
            rows.append({"door": door.id, "seed": seed, "check": "push_pull", "match": swing is truth,
                         "detail": f"{swing.value if swing else 'inconclusive'} vs {truth.value}"})
    return rows


# --------------------------------------------------------------------------
# fuzzing


def fuzz_episode(index: int, base_seed: int = 0) -> tuple[EpisodeRecord, int]:
    """One randomized episode: generated door, random method, faults and contact loss.

    Returns the record and the step bound it must respect.
    """
    from .planner import max_episode_steps

    rng = np.random.default_rng([base_seed, index, 0xF0])
    door = gen_suite(1, int(rng.integers(2 ** 31)), locked_fraction=0.3)[0]
    cfg = default_config()
    loss = {p.value: float(rng.uniform(0, 0.3)) for p in PrimitiveId if rng.uniform() < 0.5}
    cfg = cfg.replace(primitives={"contact_loss_prob": loss,
                                  "swing_classifier": "coin" if rng.uniform() < 0.2 else "haptic"})
    codes = list(ErrorCode)
    injections = tuple(FaultInjection(codes[int(rng.integers(len(codes)))], int(rng.integers(1, 4)))
                       for _ in range(int(rng.integers(0, 4))))
    method = METHODS[int(rng.integers(len(METHODS)))]
    return episode(door, [base_seed, index, 1], cfg, method, injections), max_episode_steps(cfg)
