"""Reversible Markov chains with marked subsets: validation, exact hitting
times through both closed forms, survival probabilities, variances, and the
classical Monte-Carlo baseline.

Transition matrices are column-stochastic: entry (s', s) is Pr(s'|s). The
stationary vector, detailed balance, irreducibility, aperiodicity and spectrum
nonnegativity are all checked at construction; nothing downstream re-validates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT_CONSTANTS, Constants
from .errors import ValidationError, WalkTimeoutError
from .operators import HermitianOperator

COLUMN_SUM_ATOL = 1e-12
DETAILED_BALANCE_ATOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
MAX_TOTAL_WALK_STEPS = 10**9


@dataclass(frozen=True)
class MarkovChain:
    """Validated reversible, irreducible, aperiodic chain with nonnegative spectrum."""

    transition: np.ndarray
    stationary: np.ndarray
    sparsity: int

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]


def _support_components(adj: np.ndarray) -> bool:
    """True when the (symmetric) support graph is connected."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in np.nonzero(adj[v])[0]:
            if not seen[u]:
                seen[u] = True
                stack.append(int(u))
    return bool(seen.all())


def _is_bipartite(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    color = np.full(n, -1, dtype=int)
    color[0] = 0
    stack = [0]
    while stack:
        v = stack.pop()
        for u in np.nonzero(adj[v])[0]:
            if u == v:
                return False
            if color[u] == -1:
                color[u] = 1 - color[v]
                stack.append(int(u))
            elif color[u] == color[v]:
                return False
    return True


def validate_chain(p, require_nonnegative_spectrum: bool = True) -> MarkovChain:
    """Build a MarkovChain from a raw column-stochastic matrix, or reject it.

    Checks, in order: shape and nonnegativity, column sums, connectivity of
    the support, the fixed point, detailed balance, aperiodicity, and
    nonnegativity of the spectrum (through the symmetrized similar matrix).

    A state with no self-loop whose neighbors are all outside its block forces
    a negative eigenvalue, so the classical hitting-time formulas are also
    exercised on chains validated with require_nonnegative_spectrum=False;
    the operator pipeline keeps the strict default.
    """
    mat = np.array(p, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"transition matrix must be square, got shape {mat.shape}")
    if mat.shape[0] < 2:
        raise ValidationError("need at least two states")
    if not np.all(np.isfinite(mat)) or np.any(mat < 0):
        raise ValidationError("transition probabilities must be finite and nonnegative")
    col_sums = mat.sum(axis=0)
    if np.max(np.abs(col_sums - 1.0)) > COLUMN_SUM_ATOL:
        raise ValidationError("columns must sum to 1 (column-stochastic convention)")

    support = mat > 0
    if not _support_components(support | support.T):
        raise ValidationError("chain is reducible (support graph not connected)")

    w, vecs = np.linalg.eig(mat)
    idx = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[idx] - 1.0) > 1e-9:
        raise ValidationError("no eigenvalue 1: not a stochastic fixed point")
    pi = np.real(vecs[:, idx])
    pi = pi / pi.sum()
    if np.any(pi <= 0):
        raise ValidationError("stationary vector is not strictly positive")
    if np.max(np.abs(mat @ pi - pi)) > 1e-9:
        raise ValidationError("fixed-point residual too large")

    balance = mat * pi[None, :]
    if np.max(np.abs(balance - balance.T)) > DETAILED_BALANCE_ATOL:
        raise ValidationError("detailed balance fails: chain is not reversible")
    if not np.allclose(support, support.T):
        raise ValidationError("support is not symmetric")

    if not np.any(np.diag(mat) > 0) and _is_bipartite(support):
        raise ValidationError("chain is periodic (bipartite support, no self-loops)")

    if require_nonnegative_spectrum:
        s = discriminant_matrix(mat)
        eigs = np.linalg.eigvalsh(s)
        if float(eigs.min()) < EIGENVALUE_FLOOR:
            raise ValidationError(
                f"spectrum has negative eigenvalue {eigs.min():.3e}; lazify the chain first"
            )

    mat.flags.writeable = False
    pi.flags.writeable = False
    sparsity = int(max(np.count_nonzero(mat, axis=0).max(), np.count_nonzero(mat, axis=1).max()))
    return MarkovChain(transition=mat, stationary=pi, sparsity=sparsity)


def discriminant_matrix(p: np.ndarray) -> np.ndarray:
    """Entrywise sqrt(P o P^T), the symmetric matrix similar to P for reversible chains."""
    return np.sqrt(np.asarray(p) * np.asarray(p).T)


def lazify(p) -> np.ndarray:
    """(P + 1)/2: shifts the spectrum into [0, 1] while keeping the fixed point."""
    mat = np.asarray(p, dtype=float)
    return (mat + np.eye(mat.shape[0])) / 2


@dataclass(frozen=True)
class MarkedPartition:
    """A chain split into unmarked (U) and marked (M) blocks."""

    chain: MarkovChain
    marked: tuple[int, ...]
    unmarked: tuple[int, ...]
    p_uu: np.ndarray
    p_um: np.ndarray
    p_mu: np.ndarray
    p_mm: np.ndarray
    pi_u: float
    pi_m: float

    @property
    def n_unmarked(self) -> int:
        return len(self.unmarked)

    @property
    def pi_u_conditioned(self) -> np.ndarray:
        """Stationary vector conditioned on U (sums to 1)."""
        return self.chain.stationary[list(self.unmarked)] / self.pi_u

    @property
    def sqrt_pi_u(self) -> np.ndarray:
        """Unit vector with entries sqrt(pi(s))/sqrt(pi_U) over U."""
        return np.sqrt(self.chain.stationary[list(self.unmarked)] / self.pi_u)


def mark_states(chain: MarkovChain, marked) -> MarkedPartition:
    marked = tuple(sorted(set(int(s) for s in marked)))
    n = chain.n_states
    if not marked:
        raise ValidationError("marked set must be nonempty")
    if any(s < 0 or s >= n for s in marked):
        raise ValidationError("marked state out of range")
    unmarked = tuple(s for s in range(n) if s not in set(marked))
    if not unmarked:
        raise ValidationError("unmarked set must be nonempty")
    p = chain.transition
    u, m = list(unmarked), list(marked)
    p_uu = p[np.ix_(u, u)]
    p_um = p[np.ix_(u, m)]
    p_mu = p[np.ix_(m, u)]
    p_mm = p[np.ix_(m, m)]
    if not np.any(p_um > 0) or not np.any(p_mu > 0):
        raise ValidationError("both cross blocks must be nonzero")
    pi_u = float(chain.stationary[u].sum())
    pi_m = float(chain.stationary[m].sum())
    for a in (p_uu, p_um, p_mu, p_mm):
        a.flags.writeable = False
    return MarkedPartition(
        chain=chain, marked=marked, unmarked=unmarked,
        p_uu=p_uu, p_um=p_um, p_mu=p_mu, p_mm=p_mm,
        pi_u=pi_u, pi_m=pi_m,
    )


@dataclass(frozen=True)
class DiscriminantPair:
    """The symmetric discriminant of a partitioned chain and its U-block Hamiltonian.

    h_matrix = 1 - D_U^{-1} P_UU D_U on the unmarked block; delta is its
    smallest eigenvalue, and 1/delta upper-bounds t_h / pi_U.
    """

    s_matrix: np.ndarray
    h_matrix: HermitianOperator
    delta: float


def discriminant_pair(mp: MarkedPartition) -> DiscriminantPair:
    chain = mp.chain
    p = chain.transition
    s = discriminant_matrix(p)
    d = np.sqrt(chain.stationary)
    similar = (p * d[None, :]) / d[:, None]
    if np.max(np.abs(s - similar)) > 1e-10:
        raise ValidationError("discriminant does not match the similarity transform")
    u = list(mp.unmarked)
    h_block = np.eye(len(u)) - s[np.ix_(u, u)]
    d_u = d[u]
    direct = np.eye(len(u)) - (mp.p_uu * d_u[None, :]) / d_u[:, None]
    if np.max(np.abs(h_block - direct)) > 1e-10:
        raise ValidationError("restricted Hamiltonian mismatch between constructions")
    h = HermitianOperator(h_block)
    delta = float(h.eigensystem[0][0])
    if delta <= 0:
        raise ValidationError(f"restricted Hamiltonian is not positive: delta = {delta:.3e}")
    if float(h.eigensystem[0][-1]) > 1.0 + 1e-9:
        raise ValidationError("restricted Hamiltonian exceeds 1; chain spectrum has negatives")
    s.flags.writeable = False
    return DiscriminantPair(s_matrix=s, h_matrix=h, delta=delta)


def survival_probability(mp: MarkedPartition, t_prime: int) -> float:
    """pi_U <1_U| (P_UU)^t |pi_U>: probability the walk is still unmarked after t steps."""
    if t_prime < 0:
        raise ValidationError("t_prime must be nonnegative")
    power = np.linalg.matrix_power(mp.p_uu, t_prime)
    return float(mp.pi_u * np.ones(mp.n_unmarked) @ power @ mp.pi_u_conditioned)


def exact_hitting_time_resolvent(mp: MarkedPartition) -> float:
    """t_h = pi_U <1_U| (1 - P_UU)^{-1} |pi_U> by dense solve."""
    rhs = mp.pi_u_conditioned
    sol = np.linalg.solve(np.eye(mp.n_unmarked) - mp.p_uu, rhs)
    return float(mp.pi_u * sol.sum())


def exact_hitting_time_inverse(dp: DiscriminantPair, mp: MarkedPartition) -> float:
    """t_h = pi_U <sqrt(pi_U)| H^{-1} |sqrt(pi_U)> on the unmarked block."""
    v = mp.sqrt_pi_u
    sol = np.linalg.solve(dp.h_matrix.matrix, v)
    return float(mp.pi_u * np.real(v @ sol))


def exact_variance(mp: MarkedPartition) -> float:
    """Closed-form variance of the hitting time of a stationary-started walk.

    2 pi_U <1_U| P_UU (1-P_UU)^{-2} |pi_U> + t_h - t_h^2, using
    sum_t t x^t = x/(1-x)^2 termwise on the block.
    """
    t_h = exact_hitting_time_resolvent(mp)
    eye = np.eye(mp.n_unmarked)
    first = np.linalg.solve(eye - mp.p_uu, mp.pi_u_conditioned)
    second = np.linalg.solve(eye - mp.p_uu, first)
    series = float(np.ones(mp.n_unmarked) @ (mp.p_uu @ second))
    var = 2 * mp.pi_u * series + t_h - t_h * t_h
    return max(var, 0.0)


def chebyshev_sample_count(
    mp: MarkedPartition, epsilon: float, constants: Constants = DEFAULT_CONSTANTS
) -> int:
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    return max(1, math.ceil(constants.mc_sample_constant * exact_variance(mp) / epsilon**2))


def expected_mc_cost(
    mp: MarkedPartition, epsilon: float, constants: Constants = DEFAULT_CONSTANTS
) -> tuple[int, float]:
    """(sample count, expected total applications of P) for the classical estimator."""
    m = chebyshev_sample_count(mp, epsilon, constants)
    return m, m * exact_hitting_time_resolvent(mp)


def classical_mc_estimate(
    mp: MarkedPartition,
    epsilon: float,
    seed: int,
    constants: Constants = DEFAULT_CONSTANTS,
    max_total_steps: int = MAX_TOTAL_WALK_STEPS,
) -> tuple[float, int, int]:
    """Monte-Carlo hitting-time estimate from seeded stationary-start walks.

    Walk i draws from its own stream default_rng([seed, i]), so samples can be
    partitioned across workers and merged by averaging without changing the
    result. Returns (estimate, samples_used, total P applications).
    """
    m = chebyshev_sample_count(mp, epsilon, constants)
    chain = mp.chain
    marked = frozenset(mp.marked)
    cum_pi = np.cumsum(chain.stationary)
    cum_cols = np.cumsum(chain.transition, axis=0)
    total_steps = 0
    total_time = 0
    for i in range(m):
        g = np.random.default_rng([seed, i])
        state = int(np.searchsorted(cum_pi, g.random(), side="right"))
        t = 0
        while state not in marked:
            t += 1
            total_steps += 1
            if total_steps > max_total_steps:
                raise WalkTimeoutError(f"exceeded {max_total_steps} total walk steps")
            state = int(np.searchsorted(cum_cols[:, state], g.random(), side="right"))
        total_time += t
    return total_time / m, m, total_steps


# ---------------------------------------------------------------------------
# Chain families.

def symmetric_two_state() -> MarkovChain:
    return validate_chain(np.full((2, 2), 0.5))


def lazy_cycle(n: int, stay: float = 0.5) -> MarkovChain:
    """Cycle walk that stays put with probability `stay` and hops to a random neighbor
    otherwise. stay >= 1/2 keeps the spectrum nonnegative."""
    if n < 3:
        raise ValidationError("cycle needs at least 3 states")
    if not 0.5 <= stay < 1.0:
        raise ValidationError("stay probability must lie in [0.5, 1)")
    p = np.zeros((n, n))
    hop = (1.0 - stay) / 2
    for s in range(n):
        p[s, s] = stay
        p[(s + 1) % n, s] += hop
        p[(s - 1) % n, s] += hop
    return validate_chain(p)


def random_reversible_chain(
    rng: np.random.Generator,
    n: int,
    extra_edges: int | None = None,
    laziness: float = 0.5,
    max_degree: int | None = None,
) -> MarkovChain:
    """Random walk on a random connected weighted graph, lazified into validity.

    Symmetric edge weights give detailed balance with pi proportional to the
    weighted degree; the laziness shift keeps the spectrum nonnegative. The
    transition matrix itself is generally not symmetric (degrees differ).
    An optional per-node degree cap bounds the sparsity at max_degree + 1.
    """
    if n < 2:
        raise ValidationError("need at least two states")
    if max_degree is not None and max_degree < 2:
        raise ValidationError("max_degree below 2 cannot stay connected")
    w = np.zeros((n, n))
    degree = np.zeros(n, dtype=int)
    order = rng.permutation(n)
    for i in range(1, n):
        a = order[i]
        if max_degree is None:
            b = order[rng.integers(0, i)]
        else:
            candidates = [order[j] for j in range(i) if degree[order[j]] < max_degree]
            b = candidates[rng.integers(0, len(candidates))] if candidates else order[rng.integers(0, i)]
        w[a, b] = w[b, a] = rng.uniform(0.2, 1.0)
        degree[a] += 1
        degree[b] += 1
    if extra_edges is None:
        extra_edges = n
    for _ in range(extra_edges):
        a, b = rng.integers(0, n, size=2)
        if a == b or w[a, b] > 0:
            continue
        if max_degree is not None and (degree[a] >= max_degree or degree[b] >= max_degree):
            continue
        w[a, b] = w[b, a] = rng.uniform(0.2, 1.0)
        degree[a] += 1
        degree[b] += 1
    deg = w.sum(axis=0)
    p = w / deg[None, :]
    if laziness > 0:
        p = laziness * np.eye(n) + (1 - laziness) * p
    return validate_chain(p)


def random_sparse_dyadic_chain(
    rng: np.random.Generator,
    n: int,
    degree: int,
    bits: int = 10,
    edge_cap_divisor: int = 4,
) -> MarkovChain:
    """Sparse reversible chain whose probabilities are exact dyadic rationals k/2^bits.

    Built from integer symmetric edge weights on a bounded-degree connected
    graph, padded with self-loop weight so every column totals 2^bits; the
    self-loop majority keeps the spectrum nonnegative. Row/column sparsity is
    at most degree + 1 (neighbors plus the self-loop). Per-edge weights are
    capped at 2^bits/(edge_cap_divisor * degree); the default keeps plenty of
    laziness, and divisor 2 trades laziness for larger spectral gaps (still
    validated, so a rare unlucky draw raises instead of slipping through).
    """
    if degree < 1 or n < 2:
        raise ValidationError("need degree >= 1 and n >= 2")
    if edge_cap_divisor < 2:
        raise ValidationError("edge_cap_divisor below 2 abandons the self-loop majority")
    denom = 1 << bits
    w = np.zeros((n, n), dtype=np.int64)
    neighbor_count = np.zeros(n, dtype=int)
    order = rng.permutation(n)
    cap = denom // (edge_cap_divisor * degree)
    for i in range(1, n):
        a = order[i]
        candidates = [order[j] for j in range(i) if neighbor_count[order[j]] < degree]
        b = candidates[rng.integers(0, len(candidates))] if candidates else order[rng.integers(0, i)]
        weight = int(rng.integers(1, cap))
        w[a, b] += weight
        w[b, a] += weight
        neighbor_count[a] += 1
        neighbor_count[b] += 1
    for _ in range(n):
        a, b = rng.integers(0, n, size=2)
        if a != b and neighbor_count[a] < degree and neighbor_count[b] < degree and w[a, b] == 0:
            weight = int(rng.integers(1, cap))
            w[a, b] += weight
            w[b, a] += weight
            neighbor_count[a] += 1
            neighbor_count[b] += 1
    p = np.zeros((n, n))
    for s in range(n):
        off = int(w[:, s].sum())
        if off >= denom:
            raise ValidationError("edge weights overflow the dyadic budget")
        p[:, s] = w[:, s] / denom
        p[s, s] = (denom - off) / denom
    return validate_chain(p)


# ---------------------------------------------------------------------------
# Sparse-triplet JSON wire format.

def chain_to_json(chain: MarkovChain, marked) -> dict:
    rows, cols = np.nonzero(chain.transition)
    entries = [
        [int(r), int(c), float(chain.transition[r, c])] for r, c in zip(rows, cols)
    ]
    return {
        "n_states": int(chain.n_states),
        "entries": entries,
        "marked": [int(s) for s in sorted(set(marked))],
    }


def chain_from_json(obj: dict) -> tuple[MarkovChain, tuple[int, ...]]:
    try:
        n = int(obj["n_states"])
        entries = obj["entries"]
        marked = tuple(int(s) for s in obj["marked"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed chain JSON: {exc}") from exc
    p = np.zeros((n, n))
    for item in entries:
        if len(item) != 3:
            raise ValidationError(f"bad triplet {item!r}")
        r, c, prob = int(item[0]), int(item[1]), float(item[2])
        if not (0 <= r < n and 0 <= c < n):
            raise ValidationError(f"triplet index out of range: {item!r}")
        p[r, c] = prob
    return validate_chain(p), marked
