"""Per-state holding costs and their expectations.

Two families: linear C*n, and a mean-variance trade-off
beta*n + (1-beta)*sum_i (i^2 - i*theta) * kernel(i|n), which weighs the first
and second moments of the per-slot departure count.  Both vanish at n=0 and
must be non-decreasing in n.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CostMonotonicityError
from .queueing import ServerParams, departure_kernel


@dataclass(frozen=True)
class LinearCost:
    slope: float = 1.0

    def __post_init__(self):
        if self.slope < 0:
            raise ValueError("cost slope must be non-negative")


@dataclass(frozen=True)
class MeanVarianceCost:
    beta: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")


CostSpec = LinearCost | MeanVarianceCost


def cost_value(spec: CostSpec, params: ServerParams, n: int) -> float:
    """Holding cost of state n for one server."""
    if n < 0:
        raise ValueError("state must be non-negative")
    if isinstance(spec, LinearCost):
        return spec.slope * n
    m = params.share_count(n)
    penalty = sum(
        (i * i - i * spec.theta) * departure_kernel(params, n, i) for i in range(1, m + 1)
    )
    return spec.beta * n + (1 - spec.beta) * penalty


def cost_values(spec: CostSpec, params: ServerParams, n_max: int) -> np.ndarray:
    """Vector [C(0), ..., C(n_max)]."""
    return np.array([cost_value(spec, params, n) for n in range(n_max + 1)])


def validate_monotone(spec: CostSpec, params: ServerParams, n_max: int) -> None:
    """Raise if the cost decreases anywhere on {0, ..., n_max}."""
    vals = cost_values(spec, params, n_max)
    bad = np.nonzero(np.diff(vals) < -1e-12)[0]
    if bad.size:
        n = int(bad[0])
        raise CostMonotonicityError(
            f"cost decreases from n={n} ({vals[n]:.6g}) to n={n + 1} ({vals[n + 1]:.6g}); "
            "index formulas assume a non-decreasing cost"
        )


def expected_cost(dist: np.ndarray, spec: CostSpec, params: ServerParams) -> float:
    """sum_m C(m) * dist[m]."""
    dist = np.asarray(dist, dtype=float)
    return float(cost_values(spec, params, len(dist) - 1) @ dist)


def cost_from_config(obj) -> CostSpec:
    """Parse {"type": "linear", "C": ...} or {"type": "mean_variance", "beta": ..., "theta": ...}."""
    kind = obj.get("type")
    if kind == "linear":
        return LinearCost(slope=float(obj.get("C", 1.0)))
    if kind == "mean_variance":
        return MeanVarianceCost(beta=float(obj["beta"]), theta=float(obj["theta"]))
    raise ValueError(f"unknown cost type {kind!r}")


def cost_to_config(spec: CostSpec) -> dict:
    if isinstance(spec, LinearCost):
        return {"type": "linear", "C": spec.slope}
    return {"type": "mean_variance", "beta": spec.beta, "theta": spec.theta}
