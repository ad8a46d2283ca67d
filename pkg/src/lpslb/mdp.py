"""Truncated joint K-server average-cost MDP: exact value iteration and
exact evaluation of stationary dispatching policies.

State space {0..B}^K.  Per slot, departures are drawn independently per
server from the pre-arrival counts; an arrival (probability p) is routed by
the chosen action and increments its server unless that server already sits
at the truncation bound B, in which case the job is lost.  With finite
blocking cost D the action set adds "block", charged pD per slot in
expectation.  Without blocking the boundary loss is pure truncation
artifact; evaluate_with_adequate_truncation verifies it is invisible.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .costs import CostSpec, cost_values
from .errors import NonConvergenceError, SingularSystemError, TruncationError
from .policies import BLOCK, Policy
from .queueing import ServerParams, departure_kernel_row
from .whittle import BlockingCost

STATE_CAP = 4_000_000
BOUNDARY_MARGIN = 5
BOUNDARY_MASS_TOL = 1e-8


@dataclass(frozen=True)
class JointMdp:
    servers: tuple[ServerParams, ...]
    p: float
    costs: tuple[CostSpec, ...]
    D: BlockingCost
    B: int
    # per-server departure smoothing matrices: smooth[k][m, m-i] = kernel(i|m)
    smooth: tuple[np.ndarray, ...]
    cost_grid: np.ndarray  # sum_k C_k(s_k) over the state lattice

    @property
    def K(self) -> int:
        return len(self.servers)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.B + 1,) * self.K

    @property
    def n_states(self) -> int:
        return (self.B + 1) ** self.K

    @property
    def actions(self) -> list:
        acts: list = list(range(self.K))
        if self.D is not None:
            acts.append(BLOCK)
        return acts


def build_joint_mdp(
    servers, p: float, costs, D: BlockingCost, B: int
) -> JointMdp:
    servers = tuple(servers)
    costs = tuple(costs)
    if len(costs) != len(servers):
        raise ValueError("need one cost spec per server")
    if not 1 <= len(servers) <= 3:
        raise ValueError("exact solver handles 1 to 3 servers")
    if B < 2:
        raise ValueError("truncation bound B must be >= 2")
    if (B + 1) ** len(servers) > STATE_CAP:
        raise TruncationError(
            f"state space ({B + 1}^{len(servers)}) exceeds cap {STATE_CAP}"
        )
    if not 0.0 < p < 1.0:
        raise ValueError(f"arrival probability p must be in (0, 1), got {p}")
    smooth = []
    for s in servers:
        M = np.zeros((B + 1, B + 1))
        for m in range(B + 1):
            row = departure_kernel_row(s, m)
            M[m, m - len(row) + 1 : m + 1] = row[::-1]
        smooth.append(M)
    axes_costs = [cost_values(c, s, B) for c, s in zip(costs, servers)]
    grid = np.zeros((B + 1,) * len(servers))
    for k, cv in enumerate(axes_costs):
        shape = [1] * len(servers)
        shape[k] = B + 1
        grid = grid + cv.reshape(shape)
    return JointMdp(servers, p, costs, D, B, tuple(smooth), grid)


def _smooth_all(mdp: JointMdp, V: np.ndarray) -> np.ndarray:
    """E[V(s - R) | s] over independent per-server departures."""
    out = V
    for k in range(mdp.K):
        out = np.tensordot(mdp.smooth[k], out, axes=([1], [k]))
        out = np.moveaxis(out, 0, k)
    return out


def _route_values(mdp: JointMdp, V: np.ndarray, S: np.ndarray) -> list[np.ndarray]:
    """E[V(next state) | s, route to j] for each server j.

    next = (s + e_j clamped at B) - R with R drawn at the pre-arrival s,
    so the shift is applied to V before smoothing and full rows fall back
    to the unshifted expectation S.
    """
    vals = []
    for j in range(mdp.K):
        W = np.copy(V)
        idx_src = [slice(None)] * mdp.K
        idx_dst = [slice(None)] * mdp.K
        idx_dst[j] = slice(0, mdp.B)
        idx_src[j] = slice(1, mdp.B + 1)
        W[tuple(idx_dst)] = V[tuple(idx_src)]
        A = _smooth_all(mdp, W)
        full = [slice(None)] * mdp.K
        full[j] = mdp.B
        A[tuple(full)] = S[tuple(full)]
        vals.append(A)
    return vals


@dataclass(frozen=True)
class SolveResult:
    g: float
    bias: np.ndarray
    actions: np.ndarray  # per-state index into mdp.actions
    iterations: int
    span: float


def value_iteration(
    mdp: JointMdp, epsilon: float = 1e-8, max_iterations: int = 1_000_000
) -> SolveResult:
    """Relative value iteration with span stopping; g is the span midpoint."""
    V = np.zeros(mdp.shape)
    p = mdp.p
    span = np.inf
    for it in range(1, max_iterations + 1):
        S = _smooth_all(mdp, V)
        cand = _route_values(mdp, V, S)
        if mdp.D is not None:
            cand.append(mdp.D + S)
        stacked = np.stack(cand)
        V_new = mdp.cost_grid + (1.0 - p) * S + p * stacked.min(axis=0)
        diff = V_new - V
        span = float(diff.max() - diff.min())
        V = V_new - V_new.flat[0]  # keep values bounded
        if span <= epsilon:
            g = float((diff.max() + diff.min()) / 2.0)
            actions = stacked.argmin(axis=0)  # ties to lowest action index
            return SolveResult(g, V, actions.reshape(-1), it, span)
    raise NonConvergenceError(
        f"value iteration span {span:.3e} above {epsilon} after {max_iterations} iterations"
    )


def _action_probabilities(mdp: JointMdp, policy) -> dict:
    """Per-action routing probability vectors over the flattened state space.

    policy is either a Policy (randomized ties expanded exactly) or an
    explicit per-state array of action indices into mdp.actions.
    """
    N = mdp.n_states
    probs = {a: np.zeros(N) for a in mdp.actions}
    states = np.array(np.unravel_index(np.arange(N), mdp.shape)).T
    if isinstance(policy, Policy):
        for idx, s in enumerate(states):
            for a, w in policy.action_distribution(s).items():
                if a is BLOCK and mdp.D is None:
                    raise ValueError("blocking action in a no-blocking model")
                probs[a][idx] = w
    else:
        amap = np.asarray(policy).reshape(-1)
        if amap.shape[0] != N:
            raise ValueError(f"action map must cover all {N} states")
        for idx, ai in enumerate(amap):
            probs[mdp.actions[int(ai)]][idx] = 1.0
    return probs


def transition_matrix(mdp: JointMdp, policy) -> tuple[sp.csr_matrix, np.ndarray]:
    """Sparse one-slot transition matrix of the chain induced by the policy,
    plus the per-state blocking probability (conditional on an arrival)."""
    N = mdp.n_states
    dep = mdp.smooth[0]
    for k in range(1, mdp.K):
        dep = sp.kron(sp.csr_matrix(dep), sp.csr_matrix(mdp.smooth[k]), format="csr")
    dep = sp.csr_matrix(dep)
    probs = _action_probabilities(mdp, policy)
    p = mdp.p
    block_w = probs.get(BLOCK, np.zeros(N))
    states = np.array(np.unravel_index(np.arange(N), mdp.shape)).T
    P = sp.csr_matrix((N, N))
    no_shift = (1.0 - p) * np.ones(N) + p * block_w
    for j in range(mdp.K):
        w = probs[j]
        at_wall = states[:, j] == mdp.B
        no_shift = no_shift + p * w * at_wall
        w_shift = p * w * ~at_wall
        if not w_shift.any():
            continue
        # shift post-departure states by +e_j: column index moves by the
        # stride of axis j; post-departure coordinates never exceed the
        # pre-arrival ones, so the shift stays inside the lattice
        stride = (mdp.B + 1) ** (mdp.K - 1 - j)
        rows = sp.diags(w_shift) @ dep
        rows = sp.csr_matrix(
            (rows.data, rows.indices + stride, rows.indptr), shape=(N, N)
        )
        P = P + rows
    P = P + sp.diags(no_shift) @ dep
    return P.tocsr(), block_w


@dataclass(frozen=True)
class EvalResult:
    g: float
    mean_queue: np.ndarray
    blocking_fraction: float
    stationary: np.ndarray
    boundary_mass: float


def policy_evaluation(mdp: JointMdp, policy) -> EvalResult:
    """Exact long-run average cost and mean queue lengths of a policy."""
    P, block_w = transition_matrix(mdp, policy)
    N = mdp.n_states
    A = (P.T - sp.identity(N, format="csr")).tolil()
    A[N - 1, :] = 1.0
    b = np.zeros(N)
    b[N - 1] = 1.0
    pi = spla.spsolve(A.tocsc(), b)
    if not np.all(np.isfinite(pi)):
        raise SingularSystemError("stationary solve of the induced chain failed")
    pi = np.maximum(pi, 0.0)
    pi = pi / pi.sum()
    states = np.array(np.unravel_index(np.arange(N), mdp.shape)).T
    mean_queue = pi @ states
    blocking = float(pi @ block_w)
    g = float(pi @ mdp.cost_grid.reshape(-1))
    if mdp.D is not None:
        g += mdp.p * mdp.D * blocking
    margin = max(mdp.B - BOUNDARY_MARGIN, 0)
    near = (states > margin).any(axis=1)
    return EvalResult(g, mean_queue, blocking, pi, float(pi[near].sum()))


def evaluate_with_adequate_truncation(
    servers, p, costs, D, policy_builder, B: int
) -> tuple[EvalResult, JointMdp]:
    """Evaluate a policy, doubling B until the stationary mass near the
    truncation boundary is negligible (no-blocking runs must not be
    polluted by the artificial wall)."""
    while True:
        mdp = build_joint_mdp(servers, p, costs, D, B)
        res = policy_evaluation(mdp, policy_builder(B))
        if res.boundary_mass < BOUNDARY_MASS_TOL:
            return res, mdp
        B = 2 * B
        if (B + 1) ** len(servers) > STATE_CAP:
            raise TruncationError(
                f"boundary mass {res.boundary_mass:.3e} still above "
                f"{BOUNDARY_MASS_TOL} at the state-space cap"
            )


def transition_row(mdp: JointMdp, state, action) -> np.ndarray:
    """Dense transition distribution for one (state, action) pair."""
    idx = int(np.ravel_multi_index(tuple(state), mdp.shape))
    amap = np.zeros(mdp.n_states, dtype=int)
    amap[:] = mdp.actions.index(action)
    P, _ = transition_matrix(mdp, amap)
    return np.asarray(P[idx].todense()).reshape(mdp.shape)
