"""Correlated Gaussian multi-graph model: indexing, permutations, sampling.

Nodes are 0-based. Edges of the complete graph on ``n`` nodes are indexed
lexicographically on ``(u, v)`` with ``u < v``; this order is fixed and is the
order used by every array and every file format in the package.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """Invalid model parameters or arguments."""


class GuardError(RuntimeError):
    """A size guard refused a computation (enumeration too large, etc.)."""


# ---------------------------------------------------------------------------
# randomness

def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``.

    The master seed and the purpose/trial counters are hashed together by
    :class:`numpy.random.SeedSequence`; the bit generator is PCG64 and normal
    variates use numpy's ziggurat, so draws are identical across platforms.
    """
    ss = np.random.SeedSequence(entropy=int(seed) % 2**64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *key: int) -> int:
    """Deterministic 64-bit seed for a sub-task identified by ``key``."""
    ss = np.random.SeedSequence(entropy=int(seed) % 2**64, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# purpose tags for substreams
STREAM_INSTANCE = 1
STREAM_SOLVER = 2
STREAM_TRIAL = 3
STREAM_BASELINE = 4
STREAM_KL = 5
STREAM_CORR = 6
STREAM_MC = 7


# ---------------------------------------------------------------------------
# parameters and indexing

@dataclass(frozen=True)
class ProblemParams:
    n: int
    p: int
    rho: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.p, (int, np.integer)) or self.p < 2:
            raise ParameterError(f"p must be an integer >= 2, got {self.p!r}")
        if not (0.0 <= self.rho <= 1.0):
            raise ParameterError(f"rho must lie in [0, 1], got {self.rho!r}")

    @property
    def N(self) -> int:
        return n_edges(self.n)


def n_edges(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(u: int, v: int, n: int) -> int:
    """Lexicographic index of the unordered pair ``{u, v}``."""
    if not (0 <= u < n and 0 <= v < n) or u == v:
        raise ParameterError(f"invalid edge ({u}, {v}) for n={n}")
    if u > v:
        u, v = v, u
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def edge_of_index(e: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`edge_index`; returns ``(u, v)`` with ``u < v``."""
    N = n_edges(n)
    if not 0 <= e < N:
        raise ParameterError(f"edge index {e} out of range for n={n}")
    u = 0
    # rows shrink by one each step; n <= a few hundred in practice
    while e >= n - 1 - u:
        e -= n - 1 - u
        u += 1
    return u, u + 1 + e


@lru_cache(maxsize=64)
def _endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu, iv = np.triu_indices(n, k=1)
    iu.setflags(write=False)
    iv.setflags(write=False)
    return iu, iv


def edge_endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(U, V)`` of endpoints of every edge, in canonical order."""
    return _endpoints(n)


def edge_index_array(u: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    return lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)


def edge_permutation(perm: np.ndarray) -> np.ndarray:
    """Edge map ``e -> Pi(e)`` induced by a node permutation, as an index array."""
    perm = np.asarray(perm)
    n = perm.shape[-1]
    U, V = edge_endpoints(n)
    return edge_index_array(perm[..., U], perm[..., V], n)


def apply_edge_permutation(pi_j: Sequence[int], e: int, n: int) -> int:
    pi_j = check_permutation(pi_j, n)
    u, v = edge_of_index(e, n)
    return edge_index(int(pi_j[u]), int(pi_j[v]), n)


def check_permutation(perm, n: int | None = None) -> np.ndarray:
    arr = np.asarray(perm, dtype=np.int64)
    if arr.ndim != 1:
        raise ParameterError("a permutation must be a 1-d array")
    if n is not None and arr.shape[0] != n:
        raise ParameterError(f"permutation has length {arr.shape[0]}, expected {n}")
    if not np.array_equal(np.sort(arr), np.arange(arr.shape[0])):
        raise ParameterError(f"not a permutation: {arr.tolist()}")
    return arr


def invert(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.shape[-1])
    return inv


def transposition(n: int, a: int, b: int) -> np.ndarray:
    t = np.arange(n)
    t[a], t[b] = b, a
    return t


def cycle(n: int, k: int) -> np.ndarray:
    """The k-cycle 0 -> 1 -> ... -> k-1 -> 0 on the first k nodes."""
    c = np.arange(n)
    c[:k] = np.roll(np.arange(k), -1)
    return c


# ---------------------------------------------------------------------------
# permutation tuples

class PermutationTuple:
    """A p-tuple of permutations of ``{0, ..., n-1}`` stored as a ``(p, n)`` array.

    ``perms[j, u]`` is the common label of node ``u`` of graph ``j``.
    """

    __slots__ = ("perms",)

    def __init__(self, perms):
        if isinstance(perms, PermutationTuple):
            perms = perms.perms
        try:
            arr = np.array(perms, dtype=np.int64)
        except (ValueError, TypeError) as exc:
            raise ParameterError(f"perms must be a rectangular integer array: {exc}") from exc
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ParameterError("perms must be a non-empty (p, n) array")
        n = arr.shape[1]
        ref = np.arange(n)
        for row in arr:
            if not np.array_equal(np.sort(row), ref):
                raise ParameterError(f"not a permutation: {row.tolist()}")
        arr.setflags(write=False)
        self.perms = arr

    @classmethod
    def identity(cls, n: int, p: int) -> "PermutationTuple":
        return cls(np.tile(np.arange(n), (p, 1)))

    @classmethod
    def random(cls, n: int, p: int, rng: np.random.Generator) -> "PermutationTuple":
        return cls(np.stack([rng.permutation(n) for _ in range(p)]))

    @property
    def p(self) -> int:
        return self.perms.shape[0]

    @property
    def n(self) -> int:
        return self.perms.shape[1]

    def __len__(self):
        return self.p

    def __getitem__(self, j):
        return self.perms[j]

    def __eq__(self, other):
        return isinstance(other, PermutationTuple) and np.array_equal(self.perms, other.perms)

    def __hash__(self):
        return hash(self.perms.tobytes())

    def __repr__(self):
        return f"PermutationTuple({self.perms.tolist()})"

    def edge_maps(self) -> np.ndarray:
        """``(p, N)`` array with ``[j, e] = Pi_j(e)``."""
        return edge_permutation(self.perms)

    def relabel(self, phi) -> "PermutationTuple":
        """Global relabeling ``phi o pi_j`` for every j."""
        phi = check_permutation(phi, self.n)
        return PermutationTuple(phi[self.perms])

    def normalized(self) -> "PermutationTuple":
        """Representative of the global-relabeling class with ``pi_0 = id``."""
        return self.relabel(invert(self.perms[0]))

    def tolist(self) -> list[list[int]]:
        return self.perms.tolist()


def as_tuple(pi) -> PermutationTuple:
    return pi if isinstance(pi, PermutationTuple) else PermutationTuple(pi)


# ---------------------------------------------------------------------------
# graph stacks and instances

class GraphStack:
    """p weighted complete graphs as a ``(p, N)`` float64 array."""

    __slots__ = ("weights",)

    def __init__(self, weights):
        if isinstance(weights, GraphStack):
            weights = weights.weights
        try:
            arr = np.array(weights, dtype=np.float64)
        except (ValueError, TypeError) as exc:
            raise ParameterError(f"weights must be a rectangular real array: {exc}") from exc
        if arr.ndim != 2:
            raise ParameterError("weights must be a (p, N) array")
        N = arr.shape[1]
        n = int(round((1 + math.sqrt(1 + 8 * N)) / 2))
        if n_edges(n) != N or n < 2:
            raise ParameterError(f"row length {N} is not n(n-1)/2 for any n")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("graph weights must be finite")
        arr.setflags(write=False)
        self.weights = arr

    @property
    def p(self) -> int:
        return self.weights.shape[0]

    @property
    def N(self) -> int:
        return self.weights.shape[1]

    @property
    def n(self) -> int:
        return int(round((1 + math.sqrt(1 + 8 * self.N)) / 2))

    def __getitem__(self, j):
        return self.weights[j]

    def subset(self, rows) -> "GraphStack":
        return GraphStack(self.weights[rows])

    def matrix(self, j: int) -> np.ndarray:
        """Symmetric ``n x n`` weight matrix of graph j (zero diagonal)."""
        return to_matrix(self.weights[j], self.n)


def to_matrix(w: np.ndarray, n: int) -> np.ndarray:
    U, V = edge_endpoints(n)
    W = np.zeros((n, n))
    W[U, V] = w
    W[V, U] = w
    return W


@dataclass(frozen=True, eq=False)
class Instance:
    params: ProblemParams
    pi_star: PermutationTuple
    signal: np.ndarray
    noise: np.ndarray
    observed: GraphStack
    seed: int = 0

    @property
    def n(self):
        return self.params.n

    @property
    def p(self):
        return self.params.p


def assemble(signal: np.ndarray, noise: np.ndarray, pi_star: PermutationTuple, rho: float) -> np.ndarray:
    """observed[j, e] = sqrt(rho) * signal[Pi*_j(e)] + sqrt(1 - rho) * noise[j, e]."""
    return math.sqrt(rho) * signal[pi_star.edge_maps()] + math.sqrt(1.0 - rho) * noise


def sample_instance(params: ProblemParams, seed: int) -> Instance:
    """Draw (pi*, H0, Z) and assemble the observed graphs; pure in ``(params, seed)``."""
    rng = substream(seed, STREAM_INSTANCE)
    n, p, N = params.n, params.p, params.N
    pi_star = PermutationTuple(np.stack([rng.permutation(n) for _ in range(p)]))
    signal = rng.standard_normal(N)
    noise = rng.standard_normal((p, N))
    observed = GraphStack(assemble(signal, noise, pi_star, params.rho))
    signal.setflags(write=False)
    noise.setflags(write=False)
    return Instance(params, pi_star, signal, noise, observed, int(seed))


def sample_conditional(params: ProblemParams, pi_star: PermutationTuple, rng: np.random.Generator,
                       size: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``size`` stacks with a *given* pi*; returns ``(signal, noise, observed)`` arrays.

    With ``size`` set, arrays carry a leading trial axis.
    """
    N, p = params.N, params.p
    shape = () if size is None else (size,)
    signal = rng.standard_normal(shape + (N,))
    noise = rng.standard_normal(shape + (p, N))
    emaps = pi_star.edge_maps()
    permuted = signal[..., emaps]
    observed = math.sqrt(params.rho) * permuted + math.sqrt(1.0 - params.rho) * noise
    return signal, noise, observed


# ---------------------------------------------------------------------------
# empirical checks of the covariance structure

@dataclass
class CorrelationReport:
    aligned_corr: float
    aligned_se: float
    unaligned_corr: float
    unaligned_se: float
    variance: float
    variance_se: float
    trials: int


def _corr_se(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    # moment-based estimate of E[xy] (marginals are known to be centered and
    # unit-variance), SE from the sample sd of the products
    prod = x * y
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(prod.size))


def sample_batch(params: ProblemParams, trials: int, rng: np.random.Generator):
    """Vectorized draw of ``trials`` independent instances.

    Returns ``(perms, signal, noise, observed)`` with shapes ``(T, p, n)``,
    ``(T, N)``, ``(T, p, N)``, ``(T, p, N)``; pi* is uniform on (S_n)^p.
    """
    n, p, N = params.n, params.p, params.N
    perms = np.argsort(rng.random((trials, p, n)), axis=-1)
    signal = rng.standard_normal((trials, N))
    noise = rng.standard_normal((trials, p, N))
    emaps = edge_permutation(perms)
    permuted = np.take_along_axis(signal[:, None, :], emaps, axis=-1)
    observed = math.sqrt(params.rho) * permuted + math.sqrt(1.0 - params.rho) * noise
    return perms, signal, noise, observed


def empirical_edge_correlation(params: ProblemParams, trials: int, seed: int) -> CorrelationReport:
    """Monte-Carlo check of the model covariance on one aligned and one unaligned pair.

    In every trial the aligned pair is edge 0 of graph 0 and the edge of graph 1
    carrying the same signal label; the unaligned pair swaps the latter for the
    next edge of graph 1 (never aligned with edge 0 of graph 0).
    """
    if trials < 100:
        raise ParameterError("trials must be >= 100")
    rng = substream(seed, STREAM_CORR)
    n, N = params.n, params.N
    perms, _, _, obs = sample_batch(params, trials, rng)
    emaps = edge_permutation(perms)
    label = emaps[:, 0, 0]
    partner = np.argmax(emaps[:, 1, :] == label[:, None], axis=1)
    rows = np.arange(trials)
    a = obs[:, 0, 0]
    b = obs[rows, 1, partner]
    ac, ase = _corr_se(a, b)
    if N > 1:
        c = obs[rows, 1, (partner + 1) % N]
        uc, use = _corr_se(a, c)
    else:
        uc, use = float("nan"), float("nan")
    sq = a ** 2
    return CorrelationReport(ac, ase, uc, use, float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(trials)), trials)


# ---------------------------------------------------------------------------
# serialization

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def instance_to_json(inst: Instance) -> str:
    """JSON text with every real written to 17 significant digits."""
    signal = ",".join(_fmt(x) for x in inst.signal)
    observed = ",".join("[" + ",".join(_fmt(x) for x in row) + "]" for row in inst.observed.weights)
    return (
        f'{{"n":{inst.n},"p":{inst.p},"rho":{_fmt(inst.params.rho)},"seed":{inst.seed},'
        f'"pi_star":{json.dumps(inst.pi_star.tolist(), separators=(",", ":"))},'
        f'"signal":[{signal}],"observed":[{observed}]}}'
    )


def instance_to_dict(inst: Instance) -> dict:
    return json.loads(instance_to_json(inst))


def instance_from_dict(d: dict) -> Instance:
    try:
        params = ProblemParams(int(d["n"]), int(d["p"]), float(d["rho"]))
        pi_star = PermutationTuple(d["pi_star"])
        signal = np.asarray(d["signal"], dtype=np.float64)
        observed = GraphStack(d["observed"])
        seed = int(d.get("seed", 0))
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed instance: {exc}") from exc
    if pi_star.perms.shape != (params.p, params.n) or signal.shape != (params.N,) \
            or observed.weights.shape != (params.p, params.N):
        raise ParameterError("instance arrays do not match (n, p)")
    # noise is not stored; recover it from the model identity
    if params.rho < 1.0:
        noise = (observed.weights - math.sqrt(params.rho) * signal[pi_star.edge_maps()]) / math.sqrt(1.0 - params.rho)
    else:
        noise = np.zeros((params.p, params.N))
    return Instance(params, pi_star, signal, noise, observed, seed)


def dump_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(instance_to_json(inst) + "\n")


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))
