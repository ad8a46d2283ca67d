#!/usr/bin/env python3
"""Run every experiment config in scripts/configs and collect CSVs under
results/.  Each config maps to the subcommand matching its experiment kind."""

import pathlib
import sys

from lpslb.cli import main

HERE = pathlib.Path(__file__).parent
SUBCOMMAND = {
    "index_disciplines.json": "index",
    "index_mean_variance.json": "index",
    "grid_containment.json": "policy-grid",
    "grid_coincidence.json": "policy-grid",
    "sweep_classical.json": "sweep",
    "sweep_near_optimal.json": "sweep",
    "simulate_blocking.json": "simulate",
}


def run(out_dir: str = "results", threads: int = 4) -> int:
    worst = 0
    for name, sub in SUBCOMMAND.items():
        cfg = HERE / "configs" / name
        out = pathlib.Path(out_dir) / cfg.stem
        print(f"== {sub} {name}")
        rc = main([sub, "--config", str(cfg), "--out", str(out), "--threads", str(threads)])
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
