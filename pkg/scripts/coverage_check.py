#!/usr/bin/env python3
"""Validate the simulator against the exact chain: run many seeded replicas
of a two-server blocking config and count how often the 95% batch-means CI
covers the exact long-run average cost from policy_evaluation."""

import argparse

from lpslb import (
    LinearCost,
    ServerParams,
    SimConfig,
    WhittleIndexPolicy,
    build_joint_mdp,
    indexability_report,
    policy_evaluation,
    simulate,
)

SERVERS = (ServerParams(q=0.5, d=2), ServerParams(q=0.4, d=2))
COSTS = (LinearCost(1.0), LinearCost(1.0))
P, D, B = 0.3, 100.0, 60


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicas", type=int, default=100)
    ap.add_argument("--seed-base", type=int, default=180_000)
    ap.add_argument("--horizon", type=int, default=120_000)
    ap.add_argument("--warmup", type=int, default=20_000)
    args = ap.parse_args()

    tables = [indexability_report(s, c, P, D, n_max=B) for s, c in zip(SERVERS, COSTS)]
    policy = WhittleIndexPolicy(tables, blocking=True)
    mdp = build_joint_mdp(SERVERS, P, COSTS, D, B)
    exact = policy_evaluation(mdp, policy)
    print(f"exact g = {exact.g:.9g}")

    hits = 0
    for i in range(args.replicas):
        est = simulate(SimConfig(
            servers=SERVERS, p=P, costs=COSTS, D=D, policy=policy,
            horizon=args.horizon, warmup=args.warmup, seed=args.seed_base + i,
        ))
        ok = abs(est.mean_cost - exact.g) <= est.ci_half_width
        hits += ok
        if not ok:
            print(f"  miss seed={est.seed}: {est.mean_cost:.6g} +- {est.ci_half_width:.3g}")
    print(f"coverage: {hits}/{args.replicas}")


if __name__ == "__main__":
    main()
