"""Whittle index computation for LPS-d servers.

The index in state n is the subsidy that makes threshold policies n and n-1
equally costly.  In terms of the threshold chains' stationary vectors:

    W(n) = p*D - [sum_{m<=n} C(m) (pi^n(m) - pi^{n-1}(m)) + C(n+1) pi^n(n+1)]
                 / [cummass(n) - cummass(n-1)]

When blocking is disallowed (D = None here) the p*D term is dropped and the
dispatch rule routes to the highest index even if negative.

For FCFS servers the stationary vectors collapse to closed forms, giving an
explicit index expression and, for linear costs, a fully explicit formula.
Both closed forms break down at p == q, where the generic route takes over.

At n = 0 the general formula needs a threshold -1 reference chain; we take
the never-accept chain, whose stationary distribution is the point mass at
the empty state.  The index formula then reduces to W(0) = p*D - C(1) p / q
for every discipline, which is also the unique subsidy making the
threshold-0 and threshold-(-1) average costs equal.  The FCFS closed forms adopt the
same state-0 value so that all three routes agree everywhere.
"""

from dataclasses import dataclass, field

import numpy as np

from .costs import CostSpec, LinearCost, cost_value, cost_values, validate_monotone
from .errors import DegenerateParametersError, IndexDegeneracyError
from .queueing import (
    ServerParams,
    cumulative_mass_increment,
    threshold_stationary,
    threshold_weights,
)

# BlockingCost: float for a finite per-job blocking penalty, None when
# blocking is disallowed (the model with an infinite penalty).
BlockingCost = float | None

DENOMINATOR_TOL = 1e-12
DEFAULT_N_MAX = 200


def _pd_term(p: float, D: BlockingCost) -> float:
    return 0.0 if D is None else p * D


def whittle_index_general(
    params: ServerParams, cost: CostSpec, p: float, D: BlockingCost, n: int
) -> float:
    """Index from numerically solved threshold-chain stationary measures.

    Works with unnormalized GTH weights.  The two chains agree on states
    below n, and for single-slot-service chains (d=1) the weight prefixes
    come out bitwise equal, which lets the numerator be assembled without
    the catastrophic cancellation a direct difference of normalized
    vectors would suffer deep in the tails.
    """
    if n < 0:
        raise ValueError("state must be non-negative")
    q = params.q
    if n == 0:
        # threshold -1 chain = point mass at the empty state; the formula
        # reduces to W(0) = pD - C(1) pi^0(1) / pi^0(0)
        return _pd_term(p, D) - cost_value(cost, params, 1) * p / q
    x_prev, s_prev = threshold_weights(params, p, n - 1)  # states 0..n
    x_cur, s_cur = threshold_weights(params, p, n)  # states 0..n+1
    shared = np.array_equal(x_prev[:n], x_cur[:n])
    if params.is_fcfs and shared:
        # single-slot service: the shared geometric weights telescope and the
        # cumulative-mass increment collapses to x^n(n)/(S^{n-1} S^n)
        den = x_cur[n] / s_prev / s_cur
    else:
        den = x_prev[n] / s_prev - x_cur[n + 1] / s_cur
    if den < DENOMINATOR_TOL:
        raise IndexDegeneracyError(
            f"cumulative-mass increment {den:.3e} below {DENOMINATOR_TOL} at n={n}; "
            "indexability assumption numerically violated or tail exhausted"
        )
    c = cost_values(cost, params, n + 1)
    if shared:
        # shared weights: pi_cur(m) - pi_prev(m) = x(m) (s_prev - s_cur) / (s_prev s_cur)
        # for m < n, and the mass totals differ only in their top entries
        s_diff = x_prev[n] - x_cur[n] - x_cur[n + 1]
        t_shared = float(x_cur[:n].sum())
        num = (
            (c[:n] @ x_cur[:n]) * s_diff
            + c[n] * (t_shared * (x_cur[n] - x_prev[n]) - x_prev[n] * x_cur[n + 1])
            + c[n + 1] * x_cur[n + 1] * s_prev
        ) / (s_prev * s_cur)
    else:
        pi_prev = x_prev / s_prev
        pi_cur = x_cur / s_cur
        num = c[: n + 1] @ (pi_cur[: n + 1] - pi_prev[: n + 1]) + c[n + 1] * pi_cur[n + 1]
    return _pd_term(p, D) - float(num) / float(den)


def whittle_index_fcfs(p: float, q: float, cost: CostSpec, D: BlockingCost, n: int) -> float:
    """FCFS closed-form index for any non-decreasing cost; needs p != q."""
    if abs(p - q) < 1e-9:
        raise DegenerateParametersError(
            f"FCFS index closed form degenerate at p == q (p={p}, q={q})"
        )
    params = ServerParams.fcfs(q)
    cv = lambda m: cost_value(cost, params, m)
    if n == 0:
        # match the general route's threshold -1 convention at the origin
        return _pd_term(p, D) - cv(1) * p / q
    b = p * (1 - q)
    dcoef = q * (1 - p)
    ratio = b / dcoef
    geo = (p / q) ** (n + 1) * ((1 - q) / (1 - p)) ** (n - 1)
    head = sum(cv(m) * ratio ** (m - 1) for m in range(1, n))  # C(0)=0 term dropped
    return (
        _pd_term(p, D)
        + p * p / (q * q * (1 - p)) * head
        - cv(n) * q / (q - p) * (p + geo * (p / q - p - 1))
        - cv(n + 1) * p * (1 - q) / (q - p) * (1 - geo)
    )


def whittle_index_fcfs_linear(p: float, q: float, C: float, D: BlockingCost, n: int) -> float:
    """Explicit FCFS index for linear cost C*n; needs p != q."""
    if abs(p - q) < 1e-9:
        raise DegenerateParametersError(
            f"FCFS linear index closed form degenerate at p == q (p={p}, q={q})"
        )
    if n == 0:
        return _pd_term(p, D) - C * p / q
    ratio = (p * (1 - q)) / (q * (1 - p))
    return (
        _pd_term(p, D)
        + C * p * p * (1 - p) / (q - p) ** 2
        - C * p * (1 - q) / (q - p)
        - n * C * p / (q - p)
        - C * p**3 * (1 - p) / (q * (q - p) ** 2) * ratio**n
    )


def subsidy_cost(
    params: ServerParams, cost: CostSpec, p: float, D: BlockingCost, n: int, W: float
) -> float:
    """Average cost of threshold policy n under passivity subsidy W:
    sum_m C(m) pi^n(m) - (W - p*D) * pi^n(n+1)."""
    pi = threshold_stationary(params, p, n)
    c = cost_values(cost, params, n + 1)
    return float(c @ pi) - (W - _pd_term(p, D)) * float(pi[n + 1])


@dataclass(frozen=True)
class IndexTable:
    """Per-server index vector W(0..), with indexability diagnostics.

    The vector may stop short of n_max when the index has dived past the
    early-stop level or the chain tails degenerate numerically; lookups
    beyond the stored range extrapolate linearly with the last difference,
    which keeps deep-tail states strictly ordered and never winning.
    """

    params: ServerParams
    cost: CostSpec
    p: float
    D: BlockingCost
    values: np.ndarray
    n_max: int
    cumulative_mass_strictly_increasing: bool
    index_non_increasing: bool
    _tail_slope: float = field(default=0.0)

    @property
    def usable(self) -> bool:
        return self.cumulative_mass_strictly_increasing and self.index_non_increasing

    def value(self, n: int) -> float:
        if n < len(self.values):
            return float(self.values[n])
        return float(self.values[-1] + self._tail_slope * (n - len(self.values) + 1))

    def lookup(self, n_grid: np.ndarray) -> np.ndarray:
        """Vectorized value() over an integer array."""
        n_grid = np.asarray(n_grid)
        last = len(self.values) - 1
        clipped = np.minimum(n_grid, last)
        out = self.values[clipped].astype(float)
        over = n_grid > last
        if np.any(over):
            out[over] = self.values[-1] + self._tail_slope * (n_grid[over] - last)
        return out

    def first_negative_state(self) -> int | None:
        """Smallest n with W(n) < 0, or None if no stored value is negative."""
        neg = np.nonzero(self.values < 0)[0]
        return int(neg[0]) if neg.size else None


def indexability_report(
    params: ServerParams,
    cost: CostSpec,
    p: float,
    D: BlockingCost,
    n_max: int = DEFAULT_N_MAX,
) -> IndexTable:
    """Compute W(0..n_max) with monotonicity diagnostics.

    Delegates to the FCFS closed form when d=1 and p != q.  Stops early once
    the index falls below -10*|W(0)| - 10 (it diverges to -infinity and deep
    tails never win a dispatch comparison) or when the chain tails degenerate.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    validate_monotone(cost, params, n_max + 2)
    use_fcfs = params.is_fcfs and abs(p - params.q) >= 1e-9
    values = []
    mass_ok = True
    for n in range(n_max + 1):
        try:
            if use_fcfs:
                w = whittle_index_fcfs(p, params.q, cost, D, n)
            else:
                w = whittle_index_general(params, cost, p, D, n)
        except IndexDegeneracyError:
            if n <= 1:
                raise
            break  # tail mass numerically exhausted; extrapolate beyond here
        values.append(w)
        if n >= 1 and w < -10.0 * abs(values[0]) - 10.0:
            break
    if use_fcfs:
        # the generic route checks increments as it goes; scan them here
        mass_ok = all(
            cumulative_mass_increment(params, p, n) > 0.0 for n in range(1, len(values))
        )
    values = np.array(values)
    diffs = np.diff(values)
    non_increasing = bool(np.all(diffs <= 1e-9))
    slope = float(diffs[-1]) if len(diffs) else -1.0
    if slope >= 0.0:
        slope = -abs(slope) - 1e-9  # keep the extrapolated tail strictly decreasing
    return IndexTable(
        params=params,
        cost=cost,
        p=p,
        D=D,
        values=values,
        n_max=n_max,
        cumulative_mass_strictly_increasing=mass_ok,
        index_non_increasing=non_increasing,
        _tail_slope=slope,
    )
