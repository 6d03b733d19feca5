"""Maximum-likelihood alignment: objective, exact and heuristic solvers, two-stage scheme."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    STREAM_SOLVER,
    GraphStack,
    GuardError,
    ParameterError,
    PermutationTuple,
    ProblemParams,
    as_tuple,
    child_seed,
    edge_permutation,
    substream,
    to_matrix,
)

KINDS = ("exhaustive", "local-search", "pairwise", "two-stage")
INNER_KINDS = ("exhaustive", "local-search")

# chunk of last-coordinate candidates evaluated per vectorized step
_CHUNK = 4096


@dataclass(frozen=True)
class SolverOptions:
    kind: str = "local-search"
    restarts: int = 20
    max_sweeps: int = 200
    seed: int = 0
    two_stage_C: float = 1.0
    size_guard: int = 10**6
    inner: str = "local-search"   # sub-solver used by pairwise and two-stage
    profile_start: bool = True    # restart 0 starts from the weight-profile matching

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown solver kind {self.kind!r}; expected one of {KINDS}")
        if self.inner not in INNER_KINDS:
            raise ParameterError(f"inner solver must be one of {INNER_KINDS}, got {self.inner!r}")
        if int(self.restarts) < 1:
            raise ParameterError("restarts must be >= 1")
        if int(self.max_sweeps) < 1:
            raise ParameterError("max_sweeps must be >= 1")
        if not self.two_stage_C > 0:
            raise ParameterError("two_stage_C must be > 0")
        if int(self.size_guard) < 1:
            raise ParameterError("size_guard must be >= 1")


@dataclass(frozen=True)
class AlignmentEstimate:
    pi_hat: PermutationTuple
    objective: float
    solver_trace: list = field(default_factory=list)


def _stack(G) -> GraphStack:
    return G if isinstance(G, GraphStack) else GraphStack(G)


def aligned_sum(G, pi) -> np.ndarray:
    """``S[f] = sum_j G_j[Pi_j^{-1}(f)]``: all graphs moved into the common label space."""
    W = _stack(G).weights
    maps = as_tuple(pi).edge_maps()
    if maps.shape != W.shape:
        raise ParameterError(f"graph stack {W.shape} and tuple edge maps {maps.shape} disagree")
    S = np.zeros(W.shape[1])
    for j in range(W.shape[0]):
        S[maps[j]] += W[j]
    return S


def mle_objective(G, pi) -> float:
    """``<G G^T, B(pi)>`` evaluated as ``||S||^2 / p`` in O(pN)."""
    S = aligned_sum(G, pi)
    return float(S @ S) / as_tuple(pi).p


def mle_objective_sparse(G, pi) -> float:
    """Reference value by contracting the sparse alignment matrix explicitly."""
    from .alignment import build_edge_alignment

    g = _stack(G).weights.reshape(-1)
    B = build_edge_alignment(as_tuple(pi)).sparse()
    return float(g @ (B @ g))


def aggregate_graph(G, pi_hat) -> np.ndarray:
    """Average of the graphs after undoing the estimated relabelings."""
    pi_hat = as_tuple(pi_hat)
    return aligned_sum(G, pi_hat) / pi_hat.p


def effective_correlation(rho: float, p: int) -> float:
    if not 0.0 <= rho <= 1.0:
        raise ParameterError("rho must lie in [0, 1]")
    if p < 2:
        raise ParameterError("p must be >= 2")
    return math.sqrt(p - 1) * rho / math.sqrt(1 + (p - 2) * rho)


# ---------------------------------------------------------------- exhaustive

def exhaustive_count(n: int, p: int, fix_first: bool = True) -> int:
    free = p - 1 if fix_first else p
    return math.factorial(n) ** free


def mle_exhaustive(G, size_guard: int = 10**6, fix_first: bool = True) -> AlignmentEstimate:
    """Global argmax of the objective by enumeration.

    With ``fix_first`` the first coordinate is pinned to the identity, which loses
    nothing since the objective is invariant under a global relabeling. Ties go to
    the lexicographically first tuple.
    """
    G = _stack(G)
    p, n = G.p, G.n
    count = exhaustive_count(n, p, fix_first)
    if count > size_guard:
        raise GuardError(f"exhaustive search would visit {count} tuples (size_guard={size_guard})")
    W = G.weights
    if p == 1:
        pi = PermutationTuple.identity(n, 1)
        return AlignmentEstimate(pi, mle_objective(G, pi), [mle_objective(G, pi)])

    ident = np.arange(n)
    free = list(range(1 if fix_first else 0, p))
    outer_coords, last = free[:-1], free[-1]
    best_val, best_tuple = -np.inf, None
    perms_iter = lambda: itertools.permutations(range(n))  # noqa: E731

    for outer in itertools.product(*[list(perms_iter()) for _ in outer_coords]) if outer_coords else [()]:
        rows = [ident] * p
        for j, perm in zip(outer_coords, outer):
            rows[j] = np.asarray(perm)
        base = np.zeros(G.N)
        for j in range(p):
            if j != last:
                base[edge_permutation(np.asarray(rows[j]))] += W[j]
        it = perms_iter()
        while True:
            chunk = np.array(list(itertools.islice(it, _CHUNK)), dtype=np.int64)
            if chunk.size == 0:
                break
            maps = edge_permutation(chunk)                 # (m, N): edge e -> label
            inv = np.argsort(maps, axis=1)                 # label f -> edge
            S = base[None, :] + W[last][inv]
            vals = np.einsum("ij,ij->i", S, S) / p
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best_val = float(vals[k])
                rows[last] = chunk[k]
                best_tuple = np.array(rows)
    pi_hat = PermutationTuple(best_tuple)
    obj = mle_objective(G, pi_hat)
    return AlignmentEstimate(pi_hat, obj, [obj])


# -------------------------------------------------------------- local search

def _improve_coordinate(Wm: np.ndarray, Rm: np.ndarray, perm: np.ndarray,
                        order: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    """One first-improvement pass of transpositions on ``perm``.

    Maximizes ``sum_{u<v} Wm[u,v] * Rm[perm[u], perm[v]]``. ``order`` lists the
    candidate pairs (rows of ``(a, b)``) in the order they are tried.
    """
    moves = 0
    perm = perm.copy()

    def deltas():
        Rp = Rm[np.ix_(perm, perm)]
        M = Wm @ Rp
        d = np.diag(M)
        return M + M.T - d[:, None] - d[None, :] + 2.0 * Wm * Rp

    D = deltas()
    for a, b in order:
        if D[a, b] > tol:
            perm[a], perm[b] = perm[b], perm[a]
            moves += 1
            D = deltas()
    return perm, moves


def weight_profiles(w: np.ndarray, n: int) -> np.ndarray:
    """Row ``u`` holds the sorted weights of the edges incident to node ``u``."""
    M = to_matrix(w, n)
    off = ~np.eye(n, dtype=bool)
    return np.sort(M[off].reshape(n, n - 1), axis=1)


def profile_init(G) -> PermutationTuple:
    """Match each graph's nodes to those of graph 0 by sorted incident weights.

    Node ``u`` of graph ``j`` gets label ``v`` when its profile is assigned to the
    profile of node ``v`` in graph 0 (min-cost assignment on squared distances).
    Without noise the profiles coincide exactly for partner nodes.
    """
    G = _stack(G)
    n = G.n
    ref = weight_profiles(G.weights[0], n)
    rows = [np.arange(n)]
    for j in range(1, G.p):
        prof = weight_profiles(G.weights[j], n)
        cost = ((prof[:, None, :] - ref[None, :, :]) ** 2).sum(axis=2)
        r, c = linear_sum_assignment(cost)
        perm = np.empty(n, dtype=np.int64)
        perm[r] = c
        rows.append(perm)
    return PermutationTuple(np.stack(rows))


def _local_search_from(W: np.ndarray, n: int, init: np.ndarray, max_sweeps: int,
                       rng: np.random.Generator, fixed: tuple = (0,)) -> tuple[np.ndarray, int]:
    p = W.shape[0]
    perms = init.copy()
    mats = [to_matrix(W[j], n) for j in range(p)]
    S = aligned_sum(W, perms)
    iu, ju = np.triu_indices(n, 1)
    pairs = np.stack([iu, ju], axis=1)
    scale = float(np.abs(W).sum()) * (float(np.abs(W).max()) if W.size else 0.0)
    tol = 1e-12 * max(1.0, scale)
    sweeps = 0
    coords = [j for j in range(p) if j not in fixed]
    while sweeps < max_sweeps and coords:
        sweeps += 1
        moved = 0
        for j in coords:
            mj = edge_permutation(perms[j])
            Aj = np.zeros_like(S)
            Aj[mj] = W[j]
            R = S - Aj
            order = pairs[rng.permutation(len(pairs))]
            new, moves = _improve_coordinate(mats[j], to_matrix(R, n), perms[j], order, tol)
            if moves:
                perms[j] = new
                Aj = np.zeros_like(S)
                Aj[edge_permutation(new)] = W[j]
                S = R + Aj
                moved += moves
        if not moved:
            break
    return perms, sweeps


def mle_local_search(G, opts: SolverOptions | None = None, init=None) -> AlignmentEstimate:
    """Transposition hill-climbing with random restarts.

    Restart ``r`` draws its start and its pair orders from its own substream, so
    the result does not depend on execution order. Restart 0 starts from ``init``
    when given, otherwise from :func:`profile_init` unless ``opts.profile_start``
    is off; the remaining restarts start from uniform random tuples.
    """
    opts = opts or SolverOptions()
    G = _stack(G)
    p, n = G.p, G.n
    W = G.weights
    trace = []
    best = None
    for r in range(opts.restarts):
        rng = substream(opts.seed, STREAM_SOLVER, r)
        if r == 0 and init is not None:
            start = as_tuple(init).perms.copy()
            if start.shape != (p, n):
                raise ParameterError("init tuple shape does not match the graph stack")
        elif r == 0 and opts.profile_start and n > 2:
            start = profile_init(G).perms.copy()
        else:
            start = np.stack([np.arange(n)] + [rng.permutation(n) for _ in range(p - 1)])
        perms, _ = _local_search_from(W, n, start, opts.max_sweeps, rng)
        pi = PermutationTuple(perms)
        val = mle_objective(G, pi)
        trace.append(val)
        if best is None or val > best[0]:
            best = (val, pi)
    return AlignmentEstimate(best[1], best[0], trace)


# --------------------------------------------------------- composite solvers

def _solve_inner(G, opts: SolverOptions) -> AlignmentEstimate:
    if opts.inner == "exhaustive":
        return mle_exhaustive(G, size_guard=opts.size_guard)
    return mle_local_search(G, opts)


def align_pair(reference: np.ndarray, target: np.ndarray, opts: SolverOptions) -> np.ndarray:
    """Node permutation for ``target`` relative to ``reference`` (p = 2 problem)."""
    est = _solve_inner(GraphStack(np.stack([reference, target])), opts)
    return est.pi_hat.perms[1].copy()


def pairwise_baseline(G, opts: SolverOptions | None = None) -> AlignmentEstimate:
    """Align every graph to the first one independently."""
    opts = opts or SolverOptions(kind="pairwise")
    G = _stack(G)
    rows = [np.arange(G.n)]
    for j in range(1, G.p):
        sub = replace(opts, seed=child_seed(opts.seed, j))
        rows.append(align_pair(G.weights[0], G.weights[j], sub))
    pi = PermutationTuple(np.stack(rows))
    obj = mle_objective(G, pi)
    return AlignmentEstimate(pi, obj, [obj])


def stage_one_size(p: int, rho: float, C: float) -> int:
    if rho <= 0:
        raise ParameterError("two-stage needs rho > 0 (p' = C / rho is undefined at 0)")
    return min(p, max(1, math.ceil(C / rho)))


def two_stage(G, params: ProblemParams, opts: SolverOptions | None = None) -> AlignmentEstimate:
    """Jointly align the first p' graphs, then align the rest to their average."""
    opts = opts or SolverOptions(kind="two-stage")
    G = _stack(G)
    if (G.p, G.n) != (params.p, params.n):
        raise ParameterError("graph stack does not match params")
    pp = stage_one_size(params.p, params.rho, opts.two_stage_C)
    if pp == 1:
        first = AlignmentEstimate(PermutationTuple.identity(G.n, 1), 0.0, [])
    else:
        first = _solve_inner(G.subset(range(pp)), opts)
    if pp >= G.p:
        return first
    ref = aggregate_graph(G.subset(range(pp)), first.pi_hat)
    rows = list(first.pi_hat.perms)
    for j in range(pp, G.p):
        sub = replace(opts, seed=child_seed(opts.seed, j))
        rows.append(align_pair(ref, G.weights[j], sub))
    pi = PermutationTuple(np.stack(rows))
    obj = mle_objective(G, pi)
    return AlignmentEstimate(pi, obj, list(first.solver_trace))


def solve(G, opts: SolverOptions, params: ProblemParams | None = None) -> AlignmentEstimate:
    """Dispatch on ``opts.kind``."""
    if opts.kind == "exhaustive":
        return mle_exhaustive(G, size_guard=opts.size_guard)
    if opts.kind == "local-search":
        return mle_local_search(G, opts)
    if opts.kind == "pairwise":
        return pairwise_baseline(G, opts)
    if params is None:
        raise ParameterError("two-stage solver needs the problem parameters")
    return two_stage(G, params, opts)
