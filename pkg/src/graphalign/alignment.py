"""Edge/node alignment matrices of a permutation tuple and their misalignment norms.

``B(pi)`` is the ``pN x pN`` matrix with entry ``1/p`` wherever graph-edge pairs
``(j, e)`` and ``(j', e')`` carry the same common label, and ``A(pi)`` is the
node-level analogue (``pn x pn``). Rows and columns are indexed ``j * N + e``
(resp. ``j * n + u``). Both are kept sparse: each row has exactly p nonzeros.

Norms that the theory states as identities are computed on the integer
matrices ``K = p * B`` so that they come out as exact rationals.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .core import GuardError, ParameterError, PermutationTuple, as_tuple, substream

DENSE_LIMIT = 4096


class _AlignmentMatrix:
    """Shared sparse machinery; ``labels[j, i]`` is the common label of item i of graph j."""

    def __init__(self, labels: np.ndarray):
        labels = np.asarray(labels)
        self.labels = labels
        self.p, self.m = labels.shape
        inv = np.empty_like(labels)
        rows = np.arange(self.p)[:, None]
        inv[rows, labels] = np.arange(self.m)[None, :]
        # cols[j, i, k] = item of graph k sharing the label of (j, i)
        self.cols = inv[np.arange(self.p)[None, None, :], labels[:, :, None]]

    @property
    def shape(self):
        size = self.p * self.m
        return (size, size)

    def integer_matrix(self) -> sp.csr_matrix:
        """``p`` times the matrix, as a 0/1 sparse integer matrix."""
        p, m = self.p, self.m
        rows = np.repeat(np.arange(p * m), p)
        cols = (np.arange(p)[None, None, :] * m + self.cols).reshape(-1)
        data = np.ones(rows.size, dtype=np.int64)
        return sp.csr_matrix((data, (rows, cols)), shape=self.shape)

    def sparse(self) -> sp.csr_matrix:
        return self.integer_matrix().astype(np.float64) / self.p

    def dense(self) -> np.ndarray:
        if self.shape[0] > DENSE_LIMIT:
            raise GuardError(f"dense materialization refused for size {self.shape[0]} > {DENSE_LIMIT}")
        return self.sparse().toarray()

    def trace(self) -> Fraction:
        # diagonal entries are all 1/p
        return Fraction(self.p * self.m, self.p)

    def __matmul__(self, x):
        return self.sparse() @ x


class EdgeAlignmentMatrix(_AlignmentMatrix):
    def __init__(self, pi: PermutationTuple):
        self.pi = pi
        super().__init__(pi.edge_maps())

    @property
    def N(self):
        return self.m


class NodeAlignmentMatrix(_AlignmentMatrix):
    def __init__(self, pi: PermutationTuple):
        self.pi = pi
        super().__init__(pi.perms)

    @property
    def n(self):
        return self.m


def build_edge_alignment(pi) -> EdgeAlignmentMatrix:
    return EdgeAlignmentMatrix(as_tuple(pi))


def build_node_alignment(pi) -> NodeAlignmentMatrix:
    return NodeAlignmentMatrix(as_tuple(pi))


def build_partnership(pi) -> np.ndarray:
    """Dense 0/1 partnership matrix, rows/cols indexed ``u * p + j``."""
    pi = as_tuple(pi)
    lab = pi.perms.T.reshape(-1)  # (u, j) -> pi_j(u)
    return (lab[:, None] == lab[None, :]).astype(np.int64)


def partnership_from_node_alignment(A: NodeAlignmentMatrix) -> np.ndarray:
    """``p * A`` reindexed from ``j * n + u`` to ``u * p + j``."""
    p, n = A.p, A.n
    K = A.integer_matrix().toarray().reshape(p, n, p, n)
    return K.transpose(1, 0, 3, 2).reshape(n * p, n * p)


# ---------------------------------------------------------------------------
# identities

@dataclass
class ProjectionReport:
    symmetric: float
    idempotent: float
    stochastic: float
    trace: float
    expected_trace: int
    tol: float = 1e-12

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "symmetric": self.symmetric <= self.tol,
            "idempotent": self.idempotent <= self.tol,
            "stochastic": self.stochastic <= self.tol,
            "trace": abs(self.trace - self.expected_trace) <= self.tol,
        }

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def check_projection_identities(B, expected_trace: int | None = None, tol: float = 1e-12) -> ProjectionReport:
    """Max-norm residuals of ``B^T = B``, ``B^2 = B``, ``B 1 = 1`` and ``Tr B = N``.

    ``B`` may be an alignment matrix object, a scipy sparse matrix or a dense
    array. For raw matrices pass ``expected_trace``; without it the trace check
    only compares against the nearest integer.
    """
    if isinstance(B, _AlignmentMatrix):
        expected_trace = B.m
        M = B.sparse()
    else:
        M = sp.csr_matrix(B)
    if expected_trace is None:
        expected_trace = int(round(M.diagonal().sum()))
    ones = np.ones(M.shape[0])

    def maxabs(X):
        X = sp.csr_matrix(X)
        return float(np.max(np.abs(X.data))) if X.nnz else 0.0

    return ProjectionReport(
        symmetric=maxabs(M - M.T),
        idempotent=maxabs(M @ M - M),
        stochastic=float(np.max(np.abs(M @ ones - ones))),
        trace=float(M.diagonal().sum()),
        expected_trace=int(expected_trace),
        tol=tol,
    )


# ---------------------------------------------------------------------------
# misalignment

@dataclass
class MisalignmentReport:
    delta_B: float
    delta_A: float
    mismatch_count_B: int
    mismatch_count_A: int
    frobenius_gap: float
    p: int
    # exact values of the same quantity along independent routes
    delta_B_direct: Fraction
    delta_B_count: Fraction
    delta_B_trace: Fraction
    delta_A_direct: Fraction
    delta_A_count: Fraction
    delta_A_trace: Fraction
    frobenius_gap_sq: Fraction

    @property
    def consistent(self) -> bool:
        return (self.delta_B_direct == self.delta_B_count == self.delta_B_trace
                and self.delta_A_direct == self.delta_A_count == self.delta_A_trace)


def _mismatch_count(labels: np.ndarray, star_labels: np.ndarray) -> int:
    """Ordered pairs ``((j,i),(j',i'))`` aligned under pi but not under pi*."""
    p, m = labels.shape
    # bucket by pi-label: within each label class (size p), count pairs with
    # different pi*-labels
    order = np.argsort(labels, axis=None, kind="stable")
    star_flat = star_labels.reshape(-1)[order].reshape(m, p)
    same = (star_flat[:, :, None] == star_flat[:, None, :]).sum()
    return int(m * p * p - same)


def _delta_routes(mat: _AlignmentMatrix, star: _AlignmentMatrix) -> tuple[Fraction, Fraction, Fraction, int]:
    p = mat.p
    K = mat.integer_matrix()
    Ks = star.integer_matrix()
    # p^2 (B* - B* B) = p K* - K* K
    R = (p * Ks - Ks @ K).tocsr()
    direct = Fraction(int(np.abs(R.data).sum()), p * p)
    count = _mismatch_count(mat.labels, star.labels)
    via_count = Fraction(2 * count, p)
    via_trace = 2 * p * Fraction(int(R.diagonal().sum()), p * p)
    return direct, via_count, via_trace, count


def misalignment(pi, pi_star) -> MisalignmentReport:
    pi, pi_star = as_tuple(pi), as_tuple(pi_star)
    if pi.perms.shape != pi_star.perms.shape:
        raise ParameterError("pi and pi_star must have the same (p, n)")
    B, Bs = build_edge_alignment(pi), build_edge_alignment(pi_star)
    A, As = build_node_alignment(pi), build_node_alignment(pi_star)
    bd, bc, bt, nb = _delta_routes(B, Bs)
    ad, ac, at, na = _delta_routes(A, As)
    diff = (B.integer_matrix() - Bs.integer_matrix()).tocsr()
    fro_sq = Fraction(int((diff.data.astype(np.int64) ** 2).sum()), pi.p ** 2)
    return MisalignmentReport(
        delta_B=float(bc), delta_A=float(ac),
        mismatch_count_B=nb, mismatch_count_A=na,
        frobenius_gap=math.sqrt(fro_sq), p=pi.p,
        delta_B_direct=bd, delta_B_count=bc, delta_B_trace=bt,
        delta_A_direct=ad, delta_A_count=ac, delta_A_trace=at,
        frobenius_gap_sq=fro_sq,
    )


def operator_norm_gap(pi, pi_star, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """``||B(pi) - B(pi*)||_op`` by power iteration on the squared difference."""
    D = build_edge_alignment(pi).sparse() - build_edge_alignment(pi_star).sparse()
    if D.nnz == 0 or np.max(np.abs(D.data)) == 0:
        return 0.0
    D2 = (D @ D).tocsr()
    x = substream(0, 0).standard_normal(D.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = D2 @ x
        new = float(x @ y)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            lam = new
            break
        lam = new
    return math.sqrt(max(lam, 0.0))


# ---------------------------------------------------------------------------
# objective decomposition

def bilinear(x: np.ndarray, y: np.ndarray, pi: PermutationTuple) -> float:
    """``x^T B(pi) y`` for stacked ``(p, N)`` vectors, without forming B."""
    emaps = pi.edge_maps()
    p = pi.p
    xs = np.zeros(emaps.shape[1])
    ys = np.zeros(emaps.shape[1])
    for j in range(p):
        # value of graph j at label f sits at e = Pi_j^{-1}(f)
        xs[emaps[j]] += x[j]
        ys[emaps[j]] += y[j]
    return float(xs @ ys) / p


def decompose_objective(inst, pi) -> tuple[float, float, float]:
    """Signal, cross and quadratic terms of ``<G G^T, B* - B>``.

    Returns ``(<G* G*^T, B* - B>, <G* Z^T + Z G*^T, B - B*>, <Z Z^T, B - B*>)`` so
    that ``<G G^T, B* - B> = rho*signal - sqrt(rho(1-rho))*cross - (1-rho)*quadratic``.
    """
    pi = as_tuple(pi)
    star = inst.pi_star
    gstar = inst.signal[star.edge_maps()]
    Z = inst.noise
    signal = bilinear(gstar, gstar, star) - bilinear(gstar, gstar, pi)
    cross = 2.0 * (bilinear(gstar, Z, pi) - bilinear(gstar, Z, star))
    quadratic = bilinear(Z, Z, pi) - bilinear(Z, Z, star)
    return signal, cross, quadratic


# ---------------------------------------------------------------------------
# exhaustive class enumeration

@dataclass
class ClassHistogram:
    n: int
    p: int
    total: int
    by_bucket: dict[int, int]       # t = ceil(2 delta_A); t = 0 iff delta_A = 0
    closed_counts: dict[int, int]   # |{delta_A in [(t-1)/2, t/2]}| for 1 <= t <= 2np
    bounds: dict[int, int]          # C(np, t ^ np) * n^(t ^ np)

    @property
    def bound_ok(self) -> bool:
        return all(self.closed_counts[t] <= self.bounds[t] for t in self.bounds)


def enumerate_alignment_classes(n: int, p: int, limit: int = 100_000) -> ClassHistogram:
    """Histogram of (S_n)^p / global relabeling by node misalignment with the identity tuple."""
    count = math.factorial(n) ** (p - 1)
    if count > limit:
        raise GuardError(f"{count} classes exceeds the enumeration limit {limit}")
    star = build_node_alignment(PermutationTuple.identity(n, p))
    deltas = []
    ident = tuple(range(n))
    for rest in itertools.product(itertools.permutations(range(n)), repeat=p - 1):
        pi = PermutationTuple((ident,) + rest)
        A = build_node_alignment(pi)
        deltas.append(Fraction(2 * _mismatch_count(A.labels, star.labels), p))
    by_bucket: dict[int, int] = {}
    for d in deltas:
        t = math.ceil(2 * d)
        by_bucket[t] = by_bucket.get(t, 0) + 1
    closed, bounds = {}, {}
    for t in range(1, 2 * n * p + 1):
        lo, hi = Fraction(t - 1, 2), Fraction(t, 2)
        closed[t] = sum(lo <= d <= hi for d in deltas)
        k = min(t, n * p)
        bounds[t] = math.comb(n * p, k) * n ** k
    return ClassHistogram(n, p, count, dict(sorted(by_bucket.items())), closed, bounds)
