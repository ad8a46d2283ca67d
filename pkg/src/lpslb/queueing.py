"""Single-server LPS-d queue model.

A server serves up to d jobs simultaneously; with n jobs present each of the
first min(n, d) jobs completes independently with probability q/min(n, d) per
slot, so the number of departures is binomial and the mean departure rate
stays q.  d=1 is FCFS, d=None (unbounded sharing) is PS.

Threshold-policy chains: under threshold n the server accepts arrivals while
it holds at most n jobs, so the recurrent states are {0, ..., n+1}.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParametersError, SingularSystemError

MAX_FINITE_SHARE = 64  # bound on finite d, keeps the binomial pmf well-conditioned


@dataclass(frozen=True)
class ServerParams:
    """One server: service probability q and sharing level d (None = PS)."""

    q: float
    d: int | None = None
    label: str = ""

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"service probability q must be in (0, 1], got {self.q}")
        if self.d is not None:
            if self.d < 1:
                raise ValueError(f"sharing level d must be >= 1, got {self.d}")
            if self.d > MAX_FINITE_SHARE:
                raise ValueError(
                    f"finite d capped at {MAX_FINITE_SHARE} (got {self.d}); use d=None for PS"
                )

    @classmethod
    def fcfs(cls, q, label=""):
        return cls(q=q, d=1, label=label)

    @classmethod
    def ps(cls, q, label=""):
        return cls(q=q, d=None, label=label)

    def share_count(self, n: int) -> int:
        """Number of jobs in service when n jobs are present."""
        return n if self.d is None else min(n, self.d)

    @property
    def is_fcfs(self) -> bool:
        return self.d == 1


def _binom_pmf(m: int, i: int, prob: float) -> float:
    """P(Binomial(m, prob) = i) by iterative multiplication."""
    if i < 0 or i > m:
        return 0.0
    out = 1.0
    for j in range(i):
        out *= (m - j) / (j + 1) * prob
    return out * (1.0 - prob) ** (m - i)


def departure_kernel(params: ServerParams, n: int, i: int) -> float:
    """Probability of i departures in one slot given n jobs present."""
    if n < 0 or i < 0:
        raise ValueError("n and i must be non-negative")
    if n == 0:
        return 1.0 if i == 0 else 0.0
    m = params.share_count(n)
    if i > m:
        return 0.0
    return _binom_pmf(m, i, params.q / m)


def departure_kernel_row(params: ServerParams, n: int) -> np.ndarray:
    """Vector [kernel(0|n), ..., kernel(min(n,d)|n)]."""
    m = params.share_count(n)
    return np.array([departure_kernel(params, n, i) for i in range(m + 1)])


def threshold_transition_matrix(params: ServerParams, p: float, n: int) -> np.ndarray:
    """Row-stochastic matrix of the threshold-n chain on states {0, ..., n+1}.

    Departures in a slot are drawn from the pre-arrival job count, so an
    arriving job cannot leave in its arrival slot.  State n+1 is passive:
    arrivals are rejected and the row mixes departures only.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"arrival probability p must be in (0, 1), got {p}")
    if n < 0:
        raise ValueError(f"threshold must be non-negative, got {n}")
    size = n + 2
    P = np.zeros((size, size))
    for m in range(n + 1):  # active states accept the arrival
        kern = departure_kernel_row(params, m)
        mm = params.share_count(m)
        P[m, m + 1] = p * kern[0]
        for j in range(m, m - mm, -1):
            P[m, j] = p * kern[m - j + 1] + (1 - p) * kern[m - j]
        P[m, m - mm] += (1 - p) * kern[mm]
    kern = departure_kernel_row(params, n + 1)
    for i in range(params.share_count(n + 1) + 1):
        P[n + 1, n + 1 - i] = kern[i]
    return P


def stationary_weights(P: np.ndarray) -> tuple[np.ndarray, float]:
    """Unnormalized stationary measure of a row-stochastic matrix by GTH
    elimination, anchored at x[0] = 1, together with its total mass.

    GTH is a direct dense elimination that avoids subtractions, so tiny tail
    weights come out with small componentwise *relative* error; a plain
    (P^T - I) solve would drown them in absolute rounding noise.  Callers
    that difference measures of two nearby chains keep that relative
    accuracy by working with the weights instead of normalized vectors.
    """
    A = np.array(P, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SingularSystemError("transition matrix must be square")
    S = A.shape[0]
    x = np.ones(S)
    for k in range(S - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0.0:
            raise SingularSystemError(f"state {k} unreachable backwards; chain not irreducible")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    for k in range(1, S):
        x[k] = x[:k] @ A[:k, k]
    return x, float(x.sum())


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary vector of a row-stochastic matrix (GTH elimination)."""
    x, total = stationary_weights(P)
    return x / total


def fcfs_stationary_closed_form(p: float, q: float, n: int) -> np.ndarray:
    """Closed-form stationary vector of the FCFS (d=1) threshold-n chain.

    Undefined at p == q; raises DegenerateParametersError so the caller can
    fall back to the generic solver.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"arrival probability p must be in (0, 1), got {p}")
    if abs(p - q) < 1e-9:
        raise DegenerateParametersError(
            f"closed form degenerate at p == q (p={p}, q={q}); use stationary_distribution"
        )
    if n == 0:
        return np.array([q, p]) / (p + q)
    b = p * (1 - q)
    dcoef = q * (1 - p)
    pi1 = ((p / q) * (1 - p / q) * (1 - p) ** (n - 1)) / (
        (1 - p) ** n - (p / q) ** (n + 2) * (1 - q) ** n
    )
    pi = np.empty(n + 2)
    pi[0] = dcoef / p * pi1
    pi[1] = pi1
    ratio = b / dcoef
    for m in range(2, n + 1):
        pi[m] = ratio ** (m - 1) * pi1
    pi[n + 1] = (b / q) * ratio ** (n - 1) * pi1
    return pi


def threshold_stationary(params: ServerParams, p: float, n: int) -> np.ndarray:
    """Stationary vector of the threshold-n chain (closed form when FCFS and p != q)."""
    if params.is_fcfs and abs(p - params.q) >= 1e-9:
        return fcfs_stationary_closed_form(p, params.q, n)
    return stationary_distribution(threshold_transition_matrix(params, p, n))


def threshold_weights(params: ServerParams, p: float, n: int) -> tuple[np.ndarray, float]:
    """Unnormalized stationary weights of the threshold-n chain."""
    return stationary_weights(threshold_transition_matrix(params, p, n))


def cumulative_mass_increment(params: ServerParams, p: float, n: int) -> float:
    """sum(pi^n[0..n]) - sum(pi^{n-1}[0..n-1]), computed without cancellation.

    Each chain puts all its above-threshold mass on one state, so the
    increment equals pi^{n-1}(n) - pi^n(n+1) exactly; for n=0 the threshold
    -1 policy never accepts and its active mass is zero.  Working with
    unnormalized weights keeps the two terms relatively accurate even when
    the tail weights underflow far below the normalization mass.
    """
    if n == 0:
        return float(threshold_stationary(params, p, 0)[0])
    x_prev, s_prev = threshold_weights(params, p, n - 1)
    x_cur, s_cur = threshold_weights(params, p, n)
    if params.is_fcfs and np.array_equal(x_prev[:n], x_cur[:n]):
        # single-slot service: the shared geometric weights telescope and the
        # increment collapses to x^n(n) / (S^{n-1} S^n), subtraction-free;
        # the direct difference below would cancel catastrophically when the
        # chains pile their mass on the top states
        return float(x_cur[n] / s_prev / s_cur)
    return float(x_prev[n] / s_prev - x_cur[n + 1] / s_cur)


@dataclass(frozen=True)
class ThresholdChain:
    """Threshold-policy chain bundled with its stationary distribution."""

    params: ServerParams
    threshold: int
    arrival_prob: float
    matrix: np.ndarray
    stationary: np.ndarray


def build_threshold_chain(params: ServerParams, p: float, n: int) -> ThresholdChain:
    P = threshold_transition_matrix(params, p, n)
    return ThresholdChain(params, n, p, P, stationary_distribution(P))
