"""Command-line experiment runner.

Subcommands (each takes --config FILE plus global --seed/--out/--threads):

  index        per-server index tables              -> index.csv (n,server,W)
  policy-grid  two-server switching grids           -> grid_<policy>.csv
  simulate     Monte Carlo replicas                 -> simulate.csv
  value-iter   exact optimal solve                  -> value_iter_actions.csv
  sweep        policy comparison across a p grid    -> sweep.csv

Exit codes: 0 success, 2 config error, 3 numerical diagnostic failure,
4 value-iteration non-convergence.  All CSV numbers use 9 significant
digits so re-runs with the same seeds are byte-identical.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    CostMonotonicityError,
    DegenerateParametersError,
    IndexDegeneracyError,
    NonConvergenceError,
    QueueOverflowError,
    SingularSystemError,
    TableRangeError,
    TruncationError,
)
from .mdp import (
    build_joint_mdp,
    evaluate_with_adequate_truncation,
    policy_evaluation,
    value_iteration,
)
from .policies import JsewPolicy, JsqPolicy, Policy, RsaPolicy, WhittleIndexPolicy, switching_grid
from .sim import SimConfig, simulate
from .whittle import indexability_report

DIAGNOSTIC_ERRORS = (
    IndexDegeneracyError,
    CostMonotonicityError,
    TruncationError,
    SingularSystemError,
    QueueOverflowError,
    TableRangeError,
    DegenerateParametersError,
)


def _fmt(x) -> str:
    return f"{float(x):.9g}"


def _write_csv(path: str, header: list[str], rows: list[list[str]]):
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def _out_path(args, cfg: ExperimentConfig, default_name: str) -> str:
    name = cfg.output or default_name
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _stability_check(cfg: ExperimentConfig):
    top = cfg.q_total
    for p in cfg.p_values:
        if p >= top:
            print(
                f"warning: p={p:g} is at or above the total service rate "
                f"{top:g}; the system is unstable without blocking",
                file=sys.stderr,
            )


def build_policy(name: str, cfg: ExperimentConfig, p: float, n_max: int) -> Policy:
    if name == "jsq":
        return JsqPolicy()
    if name == "jsew":
        return JsewPolicy(q=tuple(s.q for s in cfg.servers))
    if name == "rsa":
        return RsaPolicy()
    if name == "whittle":
        tables = [
            indexability_report(s, c, p, cfg.D, n_max=n_max)
            for s, c in zip(cfg.servers, cfg.costs)
        ]
        return WhittleIndexPolicy(tables, blocking=cfg.D is not None)
    raise ConfigError(f"policies: {name!r} cannot be instantiated as a dispatcher")


def cmd_index(args, cfg: ExperimentConfig) -> int:
    p = cfg.p_values[0]
    if len(cfg.p_values) > 1:
        print("warning: index tables use the first p value only", file=sys.stderr)
    rows = []
    for k, (s, c) in enumerate(zip(cfg.servers, cfg.costs), start=1):
        table = indexability_report(s, c, p, cfg.D, n_max=cfg.n_max)
        if not table.usable:
            raise IndexDegeneracyError(
                f"server {k}: index table failed diagnostics "
                f"(mass increasing: {table.cumulative_mass_strictly_increasing}, "
                f"index non-increasing: {table.index_non_increasing})"
            )
        for n, w in enumerate(table.values):
            rows.append([str(n), str(k), _fmt(w)])
    path = _out_path(args, cfg, "index.csv")
    _write_csv(path, ["n", "server", "W"], rows)
    print(f"wrote {path} ({len(rows)} rows, p={p:g})")
    return 0


def cmd_policy_grid(args, cfg: ExperimentConfig) -> int:
    if len(cfg.servers) != 2:
        raise ConfigError("servers: switching grids are two-server only")
    p = cfg.p_values[0]
    for name in cfg.policies:
        if name == "optimal":
            mdp = build_joint_mdp(cfg.servers, p, cfg.costs, cfg.D, cfg.B)
            res = value_iteration(mdp, epsilon=cfg.epsilon)
            grid = res.actions.reshape(mdp.shape).copy()
            if cfg.D is not None:
                grid[grid == len(mdp.actions) - 1] = -1
        else:
            policy = build_policy(name, cfg, p, max(cfg.n_max, cfg.B))
            grid = switching_grid(policy, cfg.B)
        rows = []
        for n1 in range(grid.shape[0]):
            for n2 in range(grid.shape[1]):
                a = int(grid[n1, n2])
                rows.append([str(n1), str(n2), "block" if a < 0 else str(a + 1)])
        path = _out_path(args, cfg, f"grid_{name}.csv")
        _write_csv(path, ["n1", "n2", "action"], rows)
        print(f"wrote {path} (p={p:g}, B={cfg.B})")
    return 0


def cmd_simulate(args, cfg: ExperimentConfig) -> int:
    _stability_check(cfg)
    seeds = (args.seed,) if args.seed is not None else cfg.seeds
    K = len(cfg.servers)
    jobs = []
    for p in cfg.p_values:
        for name in cfg.policies:
            if name == "optimal":
                raise ConfigError("policies: the optimal benchmark is not simulatable")
            policy = build_policy(name, cfg, p, cfg.n_max)
            for seed in seeds:
                jobs.append((p, name, policy, seed))

    def run(job):
        p, name, policy, seed = job
        est = simulate(SimConfig(
            servers=cfg.servers, p=p, costs=cfg.costs, D=cfg.D,
            policy=policy, horizon=cfg.horizon, warmup=cfg.warmup, seed=seed,
        ))
        return (p, name, est)

    with ThreadPoolExecutor(max_workers=args.threads) as ex:
        results = list(ex.map(run, jobs))
    results.sort(key=lambda r: (r[0], r[1], r[2].seed))
    rows = []
    for p, name, est in results:
        rows.append(
            [_fmt(p), name, _fmt(est.mean_cost), _fmt(est.ci_half_width)]
            + [_fmt(v) for v in est.mean_queue]
            + [_fmt(est.blocking_fraction), str(est.seed), str(est.slots_simulated)]
        )
    header = (
        ["p", "policy", "mean_cost", "ci"]
        + [f"mean_q{k + 1}" for k in range(K)]
        + ["blocking_fraction", "seed", "slots"]
    )
    path = _out_path(args, cfg, "simulate.csv")
    _write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def cmd_value_iter(args, cfg: ExperimentConfig) -> int:
    p = cfg.p_values[0]
    mdp = build_joint_mdp(cfg.servers, p, cfg.costs, cfg.D, cfg.B)
    res = value_iteration(mdp, epsilon=cfg.epsilon)
    print(f"g={_fmt(res.g)} iterations={res.iterations} span={_fmt(res.span)}")
    states = np.array(np.unravel_index(np.arange(mdp.n_states), mdp.shape)).T
    n_route = len(mdp.actions) - (1 if cfg.D is not None else 0)
    rows = []
    for s, a in zip(states, res.actions):
        label = "block" if a >= n_route else str(int(a) + 1)
        rows.append([str(int(v)) for v in s] + [label])
    header = [f"n{k + 1}" for k in range(mdp.K)] + ["action"]
    path = _out_path(args, cfg, "value_iter_actions.csv")
    _write_csv(path, header, rows)
    print(f"wrote {path} (p={p:g}, B={cfg.B})")
    return 0


def _sweep_point(cfg: ExperimentConfig, p: float):
    """Exact evaluation of every requested policy at one arrival rate.

    Returns a list of (policy, mean_cost, mean_total_queue, method, ci).
    The truncation bound is chosen by the adequacy loop on the first
    dispatcher policy and shared so every policy sees the same lattice.
    """
    out = []
    names = [n for n in cfg.policies if n != "optimal"]
    B = cfg.B
    mdp = None
    if names:
        # size the lattice on the index policy when present: classical rules
        # can be unstable at high p, where their truncated cost is still the
        # meaningful comparison value
        first = "whittle" if "whittle" in names else names[0]
        names = [first] + [n for n in names if n != first]
        res, mdp = evaluate_with_adequate_truncation(
            cfg.servers, p, cfg.costs, cfg.D,
            lambda b, _n=first: build_policy(_n, cfg, p, max(cfg.n_max, b)), B,
        )
        B = mdp.B
        out.append((first, res.g, float(res.mean_queue.sum()), "exact", 0.0))
        for name in names[1:]:
            r = policy_evaluation(mdp, build_policy(name, cfg, p, max(cfg.n_max, B)))
            out.append((name, r.g, float(r.mean_queue.sum()), "exact", 0.0))
    if "optimal" in cfg.policies:
        if mdp is None:
            mdp = build_joint_mdp(cfg.servers, p, cfg.costs, cfg.D, B)
        vi = value_iteration(mdp, epsilon=cfg.epsilon)
        r = policy_evaluation(mdp, vi.actions)
        out.append(("optimal", vi.g, float(r.mean_queue.sum()), "exact", 0.0))
    return out


def _sweep_point_simulated(cfg: ExperimentConfig, p: float, seed: int):
    out = []
    for name in cfg.policies:
        if name == "optimal":
            raise ConfigError("policies: the optimal benchmark needs <= 3 servers")
        est = simulate(SimConfig(
            servers=cfg.servers, p=p, costs=cfg.costs, D=cfg.D,
            policy=build_policy(name, cfg, p, cfg.n_max),
            horizon=cfg.horizon, warmup=cfg.warmup, seed=seed,
        ))
        out.append((name, est.mean_cost, float(est.mean_queue.sum()),
                    "simulated", est.ci_half_width))
    return out


def cmd_sweep(args, cfg: ExperimentConfig) -> int:
    _stability_check(cfg)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    exact = len(cfg.servers) <= 3

    def run(p):
        if exact:
            return p, _sweep_point(cfg, p)
        return p, _sweep_point_simulated(cfg, p, seed)

    with ThreadPoolExecutor(max_workers=args.threads) as ex:
        points = list(ex.map(run, cfg.p_values))
    rows = []
    for p, entries in sorted(points, key=lambda t: t[0]):
        by_name = {name: rest for name, *rest in entries}
        ref_w = by_name.get("whittle")
        ref_o = by_name.get("optimal")
        for name, (cost, nq, method, ci) in sorted(by_name.items()):
            rel_w = "" if ref_w is None else _fmt((nq - ref_w[1]) / ref_w[1] * 100.0)
            rel_o = "" if ref_o is None else _fmt((nq - ref_o[1]) / ref_o[1] * 100.0)
            rows.append([
                _fmt(p), name, _fmt(cost), _fmt(nq), rel_w, rel_o,
                method, _fmt(ci) if method == "simulated" else "",
            ])
    header = ["p", "policy", "mean_cost", "mean_total_queue",
              "rel_diff_vs_whittle", "rel_diff_vs_optimal", "method", "ci"]
    path = _out_path(args, cfg, "sweep.csv")
    _write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} rows, {len(cfg.p_values)} p values)")
    return 0


COMMANDS = {
    "index": cmd_index,
    "policy-grid": cmd_policy_grid,
    "simulate": cmd_simulate,
    "value-iter": cmd_value_iter,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override config seeds")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="parallel sweep workers")
    parser = argparse.ArgumentParser(
        prog="lpslb",
        description="Index-based load balancing across limited-processor-sharing queues",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--config", required=True, help="JSON experiment config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DIAGNOSTIC_ERRORS as e:
        print(f"numerical diagnostic failure: {e}", file=sys.stderr)
        return 3
    except NonConvergenceError as e:
        print(f"non-convergence: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
