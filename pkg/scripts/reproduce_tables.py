"""Print the four result tables on the synthetic field suite.

    python3 scripts/reproduce_tables.py [--trials N] [--openloop-trials N] [--out DIR]

Table 1: closed loop (oracle grasp model) on all 20 doors.
Table 2: grasp model ablation, centroid vs oracle, on the five-door subset.
Table 3: open loop vs closed loop on the same subset, with analytic expectations.
Table 4: haptic push/pull classifier vs a coin flip, on all doors.
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from doorloop.config import default_config
from doorloop.harness import (ABLATION_SUBSET, SuiteConfig, per_door_csv, run_openloop, run_suite,
                              table_markdown)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--openloop-trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", help="also write each table to this directory")
    args = ap.parse_args()
    common = dict(seed=args.seed, parallel_workers=args.workers)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    def show(name, text):
        print(f"\n## {name}\n\n{text}")
        if out:
            (out / f"{name.split(':')[0].replace(' ', '_').lower()}.md").write_text(text)

    t0 = time.perf_counter()
    t1 = run_suite(SuiteConfig(trials_per_door=args.trials, method="closed-oracle", **common))
    show("Table 1: closed loop", table_markdown([t1.rows]))

    sub = dict(door_ids=ABLATION_SUBSET, trials_per_door=args.trials, **common)
    cen = run_suite(SuiteConfig(method="closed-centroid", **sub))
    orc = run_suite(SuiteConfig(method="closed-oracle", **sub))
    show("Table 2: grasp model ablation", table_markdown([cen.rows, orc.rows]))

    ol_res, ol_rows = run_openloop(SuiteConfig(door_ids=ABLATION_SUBSET, trials_per_door=args.openloop_trials,
                                               **common))
    show("Table 3: open vs closed loop", table_markdown([ol_res.rows, orc.rows]) + "\n" + per_door_csv(ol_rows))

    coin_cfg = default_config().replace(primitives={"swing_classifier": "coin"})
    coin = run_suite(SuiteConfig(trials_per_door=args.trials, method="closed-oracle", config=coin_cfg, **common))
    for r in coin.rows:
        r["method"] = "closed-oracle, coin swing"
    show("Table 4: swing classifier", table_markdown([coin.rows, t1.rows]))
    print(f"\n({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
