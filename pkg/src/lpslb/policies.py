"""Dispatching policies for a farm of parallel LPS-d servers.

A policy maps the pre-arrival queue-length vector to an action: route the
arriving job to one server, or (index policy with finite blocking cost only)
block it.  Actions are server indices 0..K-1; BLOCK stands for rejection.

Ties are broken uniformly at random in simulation (seed-controlled) and by
the lowest server index in deterministic grid rendering.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IndexDegeneracyError, TableRangeError
from .whittle import IndexTable

Action = int | None
BLOCK: Action = None


class Policy:
    """Base dispatcher: subclasses score servers, highest score wins."""

    name = "policy"

    def scores(self, state: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eligible(self, state: np.ndarray) -> np.ndarray:
        """Boolean mask of servers the policy may route to."""
        return np.ones(len(state), dtype=bool)

    def candidates(self, state) -> list[Action]:
        """Actions tied for the best score; [BLOCK] if no server is eligible."""
        state = np.asarray(state)
        mask = self.eligible(state)
        if not mask.any():
            return [BLOCK]
        sc = self.scores(state)
        best = np.max(sc[mask])
        return [int(k) for k in np.nonzero(mask & (sc == best))[0]]

    def decide(self, state, rng: np.random.Generator) -> Action:
        """Route the arrival; uniform-random tie-break from rng."""
        cands = self.candidates(state)
        if len(cands) == 1:
            return cands[0]
        return cands[rng.integers(len(cands))]

    def decide_deterministic(self, state) -> Action:
        """Route the arrival; ties go to the lowest server index."""
        return self.candidates(state)[0]

    def action_distribution(self, state) -> dict[Action, float]:
        """Exact action probabilities (uniform over the tie set)."""
        cands = self.candidates(state)
        w = 1.0 / len(cands)
        return {a: w for a in cands}


@dataclass(frozen=True)
class JsqPolicy(Policy):
    """Join the shortest queue."""

    name = "jsq"

    def scores(self, state):
        return -np.asarray(state, dtype=float)


@dataclass(frozen=True)
class JsewPolicy(Policy):
    """Join the shortest expected workload, argmin n_k / q_k."""

    q: tuple[float, ...]
    name = "jsew"

    def __post_init__(self):
        if any(qk <= 0 for qk in self.q):
            raise ValueError("JSEW requires every service probability q_k > 0")

    def scores(self, state):
        return -np.asarray(state, dtype=float) / np.asarray(self.q)


@dataclass(frozen=True)
class RsaPolicy(Policy):
    """Uniform random server allocation: every server is always tied."""

    name = "rsa"

    def scores(self, state):
        return np.zeros(len(state))


class WhittleIndexPolicy(Policy):
    """Route to the server with the highest current Whittle index.

    With blocking (every table built with finite D) only servers with a
    non-negative index are eligible and the job is blocked when there are
    none; without blocking the maximum is taken over all servers even when
    all indices are negative.
    """

    def __init__(self, tables: list[IndexTable], blocking: bool):
        for t in tables:
            if not t.usable:
                raise IndexDegeneracyError(
                    f"index table for server {t.params.label or t.params} failed its "
                    "diagnostics (cumulative mass or index monotonicity); refusing to dispatch"
                )
        if blocking and any(t.D is None for t in tables):
            raise ValueError("blocking variant needs tables built with a finite D")
        self.tables = list(tables)
        self.blocking = blocking
        self.name = "whittle" if blocking else "whittle_noblock"

    def scores(self, state):
        state = np.asarray(state)
        for k, t in enumerate(self.tables):
            if state[k] > t.n_max:
                raise TableRangeError(
                    f"queue {k} at {state[k]} exceeds table range {t.n_max}"
                )
        return np.array([t.value(int(n)) for t, n in zip(self.tables, state)])

    def eligible(self, state):
        if not self.blocking:
            return np.ones(len(state), dtype=bool)
        return self.scores(np.asarray(state)) >= 0.0

    def extended(self, n_max: int) -> "WhittleIndexPolicy":
        """Same policy with index tables recomputed out to n_max."""
        from .whittle import indexability_report

        tables = [
            indexability_report(t.params, t.cost, t.p, t.D, n_max=n_max)
            for t in self.tables
        ]
        return WhittleIndexPolicy(tables, blocking=self.blocking)


def switching_grid(policy: Policy, B: int) -> np.ndarray:
    """Deterministic action for every two-server state (n1, n2) in {0..B}^2.

    Entries are the routed server index, or -1 for block.
    """
    k = len(policy.q) if isinstance(policy, JsewPolicy) else None
    if isinstance(policy, WhittleIndexPolicy):
        k = len(policy.tables)
    if k is not None and k != 2:
        raise ValueError(f"switching grids are two-server only, policy has {k} servers")
    grid = np.empty((B + 1, B + 1), dtype=int)
    for n1 in range(B + 1):
        for n2 in range(B + 1):
            a = policy.decide_deterministic((n1, n2))
            grid[n1, n2] = -1 if a is BLOCK else a
    return grid
