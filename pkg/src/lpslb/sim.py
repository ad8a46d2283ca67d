"""Slotted-time Monte Carlo simulation of the dispatching system.

Per slot: an arrival occurs with probability p and is routed (or blocked) by
the policy based on the pre-arrival queue lengths; each nonempty server
draws its departures binomially from the pre-arrival count; the queue update
is N_k(t+1) = N_k(t) + routed_k - R_k.  Costs accrue on the pre-arrival
state, plus D per blocked arrival, and are summarized by batch means.

Randomness is split into per-purpose substreams (arrivals, tie-breaks, one
departure stream per server) spawned from the config seed, so runs with the
same seed share arrival patterns across policies (common random numbers).
"""

import logging
from dataclasses import dataclass

import numpy as np

from .costs import CostSpec, cost_value
from .errors import QueueOverflowError, TableRangeError
from .policies import BLOCK, JsewPolicy, JsqPolicy, Policy, RsaPolicy, WhittleIndexPolicy
from .queueing import ServerParams
from .whittle import BlockingCost

log = logging.getLogger(__name__)

MAX_QUEUE = 1_000_000
NORMAL_95 = 1.959963984540054


@dataclass
class SimConfig:
    servers: tuple[ServerParams, ...]
    p: float
    costs: tuple[CostSpec, ...]
    D: BlockingCost
    policy: Policy
    horizon: int
    warmup: int
    seed: int
    batches: int = 20

    def __post_init__(self):
        self.servers = tuple(self.servers)
        self.costs = tuple(self.costs)
        if len(self.costs) != len(self.servers):
            raise ValueError("need one cost spec per server")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"arrival probability p must be in [0, 1), got {self.p}")
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("need 0 <= warmup < horizon")
        if self.batches < 10:
            raise ValueError("batch-means CI needs at least 10 batches")


@dataclass(frozen=True)
class SimEstimate:
    mean_cost: float
    ci_half_width: float
    mean_queue: np.ndarray
    blocking_fraction: float
    slots_simulated: int
    seed: int
    max_queue: int = 0


class _CostCache:
    """Memoized C_k(n) lookups, grown on demand."""

    def __init__(self, spec: CostSpec, params: ServerParams):
        self.spec = spec
        self.params = params
        self.vals = [0.0]

    def __call__(self, n: int) -> float:
        while n >= len(self.vals):
            self.vals.append(cost_value(self.spec, self.params, len(self.vals)))
        return self.vals[n]


class _Dispatcher:
    """Flattens a Policy into plain-Python per-slot decisions.

    Index tables extend lazily (doubling) when a queue outruns them.
    """

    def __init__(self, policy: Policy, k: int):
        self.policy = policy
        self.k = k

    def decide(self, state: list, tie_rng: np.random.Generator):
        if isinstance(self.policy, RsaPolicy):
            return int(tie_rng.integers(self.k))
        if isinstance(self.policy, JsqPolicy):
            scores = [-n for n in state]
        elif isinstance(self.policy, JsewPolicy):
            scores = [-n / q for n, q in zip(state, self.policy.q)]
        else:
            scores = self._index_scores(state)
            if self.policy.blocking:
                cands = [j for j, s in enumerate(scores) if s >= 0.0]
                if not cands:
                    return BLOCK
                best = max(scores[j] for j in cands)
                cands = [j for j in cands if scores[j] == best]
                return cands[0] if len(cands) == 1 else cands[int(tie_rng.integers(len(cands)))]
        best = max(scores)
        cands = [j for j, s in enumerate(scores) if s == best]
        return cands[0] if len(cands) == 1 else cands[int(tie_rng.integers(len(cands)))]

    def _index_scores(self, state: list) -> list:
        while True:
            try:
                return [t.value(n) if n <= t.n_max else self._raise(n, t)
                        for t, n in zip(self.policy.tables, state)]
            except TableRangeError:
                new_max = 2 * max(t.n_max for t in self.policy.tables)
                log.info("extending index tables to n_max=%d", new_max)
                self.policy = self.policy.extended(new_max)

    @staticmethod
    def _raise(n, t):
        raise TableRangeError(f"state {n} beyond table range {t.n_max}")


def simulate(config: SimConfig) -> SimEstimate:
    """Run one replica and return batch-means estimates."""
    K = len(config.servers)
    ss = np.random.SeedSequence(config.seed)
    arr_seq, tie_seq, *dep_seqs = ss.spawn(2 + K)
    arrival_rng = np.random.default_rng(arr_seq)
    tie_rng = np.random.default_rng(tie_seq)
    dep_rngs = [np.random.default_rng(s) for s in dep_seqs]
    dispatcher = _Dispatcher(config.policy, K)
    costs = [_CostCache(c, s) for c, s in zip(config.costs, config.servers)]
    qs = [s.q for s in config.servers]
    ds = [s.d for s in config.servers]
    D = config.D

    state = [0] * K
    peak = 0
    arrivals_seen = 0
    blocked_seen = 0
    measured = config.horizon - config.warmup
    batch_cost = np.zeros(config.batches)
    queue_sums = [0] * K
    arrive = arrival_rng.random(config.horizon) < config.p

    for t in range(config.horizon):
        routed = None
        blocked = False
        if arrive[t]:
            arrivals_seen += 1
            action = dispatcher.decide(state, tie_rng)
            if action is BLOCK:
                blocked = True
                blocked_seen += 1
            else:
                routed = action
        if t >= config.warmup:
            c = 0.0
            for k in range(K):
                c += costs[k](state[k])
                queue_sums[k] += state[k]
            if blocked:
                c += D
            batch_cost[(t - config.warmup) * config.batches // measured] += c
        for k in range(K):
            n = state[k]
            if n > 0:
                m = n if ds[k] is None else min(n, ds[k])
                n -= int(dep_rngs[k].binomial(m, qs[k] / m))
            if routed == k:
                n += 1
                if n > peak:
                    peak = n
                if n > MAX_QUEUE:
                    raise QueueOverflowError(
                        f"queue {k} exceeded {MAX_QUEUE} at slot {t}; "
                        "policy appears unstable at these parameters"
                    )
            state[k] = n

    batch_size = measured / config.batches
    batch_means = batch_cost / batch_size
    mean_cost = float(batch_cost.sum() / measured)
    half = float(NORMAL_95 * batch_means.std(ddof=1) / np.sqrt(config.batches))
    blocking = blocked_seen / arrivals_seen if arrivals_seen else 0.0
    return SimEstimate(
        mean_cost=mean_cost,
        ci_half_width=half,
        mean_queue=np.array(queue_sums) / measured,
        blocking_fraction=blocking,
        slots_simulated=config.horizon,
        seed=config.seed,
        max_queue=peak,
    )
