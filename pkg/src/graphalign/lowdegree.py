"""Exact cumulant machinery for the two-graph low-degree analysis.

Everything here is desk-scale: laws are computed by enumerating the relative
permutation ``sigma = pi_1^{-1} o pi_2`` over all of S_n. After relabeling so that
``pi_1 = id``, the target is ``x = 1{sigma(0) = 0}``, graph 1 carries the signal
label ``e`` on edge ``e`` and graph 2 carries label ``Sigma(f)`` on edge ``f``.
Node 0 plays the role of the distinguished first node.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    GuardError,
    ParameterError,
    edge_index,
    edge_of_index,
    edge_permutation,
    n_edges,
    substream,
    STREAM_MC,
)

MAX_CUMULANT_ORDER = 8
VARIANTS = ("theorem", "appendix-p2")


# ------------------------------------------------------------------ types

def _as_counts(side, n: int) -> dict[int, int]:
    N = n_edges(n)
    out: dict[int, int] = {}
    items = side.items() if isinstance(side, dict) else ((e, 1) for e in side)
    for e, c in items:
        e, c = int(e), int(c)
        if not 0 <= e < N:
            raise ParameterError(f"edge id {e} out of range for n={n}")
        if c < 0:
            raise ParameterError("multiplicities must be nonnegative")
        if c:
            out[e] = out.get(e, 0) + c
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class MultiGraphPair:
    """A pair of edge multisets; ``alpha1``/``alpha2`` map edge id to multiplicity."""

    alpha1: dict
    alpha2: dict
    n: int

    def __init__(self, alpha1, alpha2, n: int):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "alpha1", _as_counts(alpha1, n))
        object.__setattr__(self, "alpha2", _as_counts(alpha2, n))

    @classmethod
    def from_edge_lists(cls, side1, side2, n: int) -> "MultiGraphPair":
        """Build from ``[[u, v, mult], ...]`` per side (mult defaults to 1)."""
        def conv(side):
            out: dict[int, int] = {}
            for item in side:
                u, v = int(item[0]), int(item[1])
                m = int(item[2]) if len(item) > 2 else 1
                e = edge_index(u, v, n)
                out[e] = out.get(e, 0) + m
            return out
        return cls(conv(side1), conv(side2), n)

    def __hash__(self):
        return hash((tuple(self.alpha1.items()), tuple(self.alpha2.items()), self.n))

    def elements(self, side: int) -> list[int]:
        counts = self.alpha1 if side == 1 else self.alpha2
        return [e for e, c in counts.items() for _ in range(c)]

    @property
    def size1(self) -> int:
        return sum(self.alpha1.values())

    @property
    def size2(self) -> int:
        return sum(self.alpha2.values())

    @property
    def size(self) -> int:
        return self.size1 + self.size2

    @property
    def factorial(self) -> int:
        out = 1
        for c in itertools.chain(self.alpha1.values(), self.alpha2.values()):
            out *= math.factorial(c)
        return out

    def support(self, side: int) -> set[int]:
        return support_of(self.elements(side), self.n)


def support_of(edges: Iterable[int], n: int) -> set[int]:
    nodes: set[int] = set()
    for e in edges:
        nodes.update(edge_of_index(int(e), n))
    return nodes


@dataclass(frozen=True)
class EdgeBijection:
    """Pairs ``(e, psi(e))`` matching the elements of alpha1 to those of alpha2."""

    pairs: tuple

    def __init__(self, pairs):
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in pairs))

    def check(self, alpha: MultiGraphPair) -> None:
        if sorted(a for a, _ in self.pairs) != sorted(alpha.elements(1)) or \
                sorted(b for _, b in self.pairs) != sorted(alpha.elements(2)):
            raise ParameterError("pairs do not use each element of alpha1 and alpha2 exactly once")


def bijections(alpha: MultiGraphPair) -> list[EdgeBijection]:
    """All distinct multiset bijections alpha1 -> alpha2 (empty unless sizes agree)."""
    left, right = alpha.elements(1), alpha.elements(2)
    if len(left) != len(right):
        return []
    seen = set()
    out = []
    for perm in itertools.permutations(right):
        key = tuple(sorted(zip(left, perm)))
        if key not in seen:
            seen.add(key)
            out.append(EdgeBijection(key))
    return out


@dataclass(frozen=True)
class LowDegreeParams:
    D: int
    rho: float
    n: int
    variant: str = "theorem"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant must be one of {VARIANTS}")
        if self.D < 0 or self.n < 2:
            raise ParameterError("need D >= 0 and n >= 2")
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError("rho must lie in [0, 1]")


# ------------------------------------------------------- cumulant formulas

@lru_cache(maxsize=None)
def set_partitions(k: int) -> tuple[tuple[int, ...], ...]:
    """All partitions of ``{0..k-1}``; each block is a bitmask."""
    if k == 0:
        return ((),)
    out = []
    for part in set_partitions(k - 1):
        bit = 1 << (k - 1)
        out.append(part + (bit,))
        for i in range(len(part)):
            out.append(part[:i] + (part[i] | bit,) + part[i + 1:])
    return tuple(out)


def _check_order(k: int) -> None:
    if k < 1:
        raise ParameterError("need at least one variable")
    if k > MAX_CUMULANT_ORDER:
        raise ParameterError(f"cumulants of order {k} > {MAX_CUMULANT_ORDER} are refused")


def cumulant_partition(k: int, moment: Callable[[int], object]):
    """Moebius sum over set partitions: sum m(P) prod_B E[prod_{s in B} Y_s]."""
    _check_order(k)
    cache: dict[int, object] = {}

    def mom(mask):
        if mask not in cache:
            cache[mask] = moment(mask)
        return cache[mask]

    total = 0
    for part in set_partitions(k):
        b = len(part)
        term = (-1) ** (b - 1) * math.factorial(b - 1)
        for block in part:
            term = term * mom(block)
        total = total + term
    return total


def cumulant_recursive(k: int, moment: Callable[[int], object]):
    """Recursion on the first variable:

    cumul(Y_1, Y_A) = E[Y_1 Y_A] - sum_{B strict subset of A} cumul(Y_1, Y_B) E[Y_{A minus B}].
    """
    _check_order(k)
    mcache: dict[int, object] = {}

    def mom(mask):
        if mask == 0:
            return 1
        if mask not in mcache:
            mcache[mask] = moment(mask)
        return mcache[mask]

    ccache: dict[int, object] = {}

    def cum(rest):   # rest: bitmask over variables 1..k-1
        if rest in ccache:
            return ccache[rest]
        val = mom(1 | rest)
        sub = (rest - 1) & rest
        while True:
            if sub != rest:
                val = val - cum(sub) * mom(rest & ~sub)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        ccache[rest] = val
        return val

    return cum(((1 << k) - 1) & ~1)


def _atom_moment(atoms, probs, exact: bool):
    def moment(mask):
        idx = [i for i in range(len(atoms[0])) if mask >> i & 1]
        total = Fraction(0) if exact else 0.0
        for row, pr in zip(atoms, probs):
            v = pr
            for i in idx:
                v = v * row[i]
            total = total + v
        return total
    return moment


def joint_cumulant(atoms: Sequence[Sequence], probs: Sequence, method: str = "partition"):
    """Joint cumulant of k variables with a finite joint law.

    ``atoms[i]`` is the value vector of atom ``i`` and ``probs[i]`` its probability.
    With Fraction probabilities (and integer/Fraction atoms) the result is exact.
    """
    atoms = [tuple(a) for a in atoms]
    if not atoms:
        raise ParameterError("empty distribution")
    k = len(atoms[0])
    exact = all(isinstance(p, (Fraction, int)) for p in probs)
    moment = _atom_moment(atoms, list(probs), exact)
    if method == "partition":
        return cumulant_partition(k, moment)
    if method == "recursion":
        return cumulant_recursive(k, moment)
    raise ParameterError("method must be 'partition' or 'recursion'")


# ---------------------------------------------------------------- Wick

def double_factorial(m: int) -> int:
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def wick_moment(labels: Sequence) -> int:
    """E[prod Z_{l}] for independent standard normals indexed by label: prod (m-1)!!."""
    counts: dict = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    out = 1
    for m in counts.values():
        if m % 2:
            return 0
        out *= double_factorial(m - 1)
    return out


@lru_cache(maxsize=None)
def perfect_matchings(k: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    if k % 2:
        return ()
    if k == 0:
        return ((),)
    out = []
    for j in range(1, k):
        rest = [i for i in range(1, k) if i != j]
        for sub in perfect_matchings(k - 2):
            out.append(((0, j),) + tuple((rest[a], rest[b]) for a, b in sub))
    return tuple(out)


def wick_pairing_sum(labels: Sequence) -> int:
    """Isserlis form: number of pair partitions whose pairs share a label."""
    return sum(all(labels[a] == labels[b] for a, b in m) for m in perfect_matchings(len(labels)))


def wick_monte_carlo(labels: Sequence, samples: int, seed: int) -> tuple[float, float]:
    distinct = sorted(set(labels), key=repr)
    pos = {lab: i for i, lab in enumerate(distinct)}
    Z = substream(seed, STREAM_MC).standard_normal((samples, len(distinct)))
    prod = np.prod(Z[:, [pos[lab] for lab in labels]], axis=1)
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(samples))


def _wick_counts(label_arrays: list[np.ndarray], length: int) -> np.ndarray:
    """Per-atom Isserlis count for label vectors (one array per Gaussian factor)."""
    k = len(label_arrays)
    if k == 0:
        return np.ones(length, dtype=np.int64)
    out = np.zeros(length, dtype=np.int64)
    for m in perfect_matchings(k):
        term = np.ones(length, dtype=bool)
        for a, b in m:
            term &= label_arrays[a] == label_arrays[b]
        out += term
    return out


# ------------------------------------------------------- permutation law

@lru_cache(maxsize=8)
def _sigma_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    return perms, edge_permutation(perms)


def _guard_n(n: int, max_n: int) -> None:
    if n > max_n:
        raise GuardError(f"enumeration over {n}! relative permutations refused (n > {max_n})")
    if n < 2:
        raise ParameterError("need n >= 2")


def _exact_mean(count_sum: int, n: int) -> Fraction:
    return Fraction(int(count_sum), math.factorial(n))


def _indicator_arrays(pairs: Sequence[tuple[int, int]], n: int) -> tuple[np.ndarray, list[np.ndarray]]:
    perms, emaps = _sigma_table(n)
    x = perms[:, 0] == 0
    inds = [emaps[:, f] == e for e, f in pairs]
    return x, inds


def _pairs_for(beta, psi, n: int) -> list[tuple[int, int]]:
    """Resolve ``beta`` (sub-multiset of alpha1 as an edge list) into (e, psi(e)) pairs."""
    pool = list(psi.pairs if isinstance(psi, EdgeBijection) else psi)
    out = []
    for e in beta:
        for i, (a, b) in enumerate(pool):
            if a == int(e):
                out.append((a, b))
                pool.pop(i)
                break
        else:
            raise ParameterError(f"edge {e} of beta is not in the domain of psi (with multiplicity)")
    return out


def indicator_moment(beta, psi, n: int, with_x: bool = True, max_n: int = 8) -> Fraction:
    """E[x * prod_{e in beta} 1{Pi_1(e) = Pi_2(psi(e))}] (drop ``x`` with ``with_x=False``)."""
    _guard_n(n, max_n)
    pairs = _pairs_for(beta, psi, n)
    x, inds = _indicator_arrays(pairs, n)
    mask = x.copy() if with_x else np.ones_like(x)
    for ind in inds:
        mask &= ind
    return _exact_mean(mask.sum(), n)


def indicator_cumulant(beta, psi, n: int, method: str = "partition", max_n: int = 8,
                       max_beta: int = 5) -> Fraction:
    """cumul(x, (1{Pi_1(e) = Pi_2(psi(e))})_{e in beta}) as an exact rational."""
    _guard_n(n, max_n)
    pairs = _pairs_for(beta, psi, n)
    if len(pairs) > max_beta:
        raise GuardError(f"|beta| = {len(pairs)} exceeds {max_beta}")
    x, inds = _indicator_arrays(pairs, n)
    variables = [x] + inds

    def moment(mask):
        acc = np.ones_like(x)
        for i, v in enumerate(variables):
            if mask >> i & 1:
                acc &= v
        return _exact_mean(acc.sum(), n)

    k = len(variables)
    return cumulant_recursive(k, moment) if method == "recursion" else cumulant_partition(k, moment)


def kappa_fraction(alpha: MultiGraphPair, method: str = "partition", max_size: int = 4,
                   max_n: int = 7) -> Fraction:
    """Exact joint cumulant of x with the signal monomial factors selected by alpha."""
    n = alpha.n
    _guard_n(n, max_n)
    if alpha.size > max_size:
        raise GuardError(f"|alpha| = {alpha.size} exceeds {max_size}")
    perms, emaps = _sigma_table(n)
    m = perms.shape[0]
    x = perms[:, 0] == 0
    labels = [np.full(m, e, dtype=np.int64) for e in alpha.elements(1)]
    labels += [emaps[:, f] for f in alpha.elements(2)]
    k = 1 + len(labels)

    def moment(mask):
        gauss = [labels[i - 1] for i in range(1, k) if mask >> i & 1]
        w = _wick_counts(gauss, m)
        if mask & 1:
            w = w * x
        return _exact_mean(w.sum(), n)

    return cumulant_recursive(k, moment) if method == "recursion" else cumulant_partition(k, moment)


def kappa_exact(alpha: MultiGraphPair, **kw) -> float:
    return float(kappa_fraction(alpha, **kw))


def kappa_monte_carlo(alpha: MultiGraphPair, samples: int, seed: int, batches: int = 100) -> tuple[float, float]:
    """Plug-in estimate of kappa from explicit Gaussian sampling, batch-means SE."""
    n, N = alpha.n, n_edges(alpha.n)
    rng = substream(seed, STREAM_MC)
    per = samples // batches
    left, right = alpha.elements(1), alpha.elements(2)
    k = 1 + len(left) + len(right)
    ests = []
    for _ in range(batches):
        sigma = np.argsort(rng.random((per, n)), axis=1)
        H = rng.standard_normal((per, N))
        emaps = edge_permutation(sigma)
        cols = [(sigma[:, 0] == 0).astype(float)]
        cols += [H[:, e] for e in left]
        cols += [np.take_along_axis(H, emaps[:, f:f + 1], axis=1)[:, 0] for f in right]
        Y = np.stack(cols, axis=1)

        def moment(mask, Y=Y):
            idx = [i for i in range(k) if mask >> i & 1]
            return float(np.prod(Y[:, idx], axis=1).mean())

        ests.append(cumulant_partition(k, moment))
    ests = np.array(ests)
    return float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(batches))


# ---------------------------------------------------------------- bounds

def _rooted_support_size(edges: Iterable[int], n: int) -> int:
    return len(support_of(edges, n) | {0})


def cumulant_bound(alpha: MultiGraphPair) -> float:
    if alpha.size1 != alpha.size2:
        return 0.0
    n, a = alpha.n, alpha.size
    base = n - 1 - a
    if base <= 0:
        raise ParameterError(f"bound undefined: n - 1 - |alpha| = {base} <= 0")
    m = _rooted_support_size(alpha.elements(1), n) + _rooted_support_size(alpha.elements(2), n)
    return (a * (1 + a / 2)) ** (a / 2) * (math.sqrt(2) / math.sqrt(base)) ** m


def moment_bound(beta, n: int, with_x: bool = True) -> float:
    """Bound on the indicator moment; with ``with_x`` the root node joins the support."""
    s = support_of(beta, n)
    m = len(s | {0}) if with_x else len(s)
    if m == 0:
        return 1.0
    if n - m <= 0:
        return math.inf
    return (math.sqrt(2) / (n - m)) ** m


def indicator_cumulant_bound(beta, n: int) -> float:
    """(1+|beta|)^|beta| (sqrt2/(n-1-2|beta|))^|{0} u supp beta|; infinite (vacuous) when the base is <= 0."""
    b = len(list(beta))
    base = n - 1 - 2 * b
    if base <= 0:
        return math.inf
    return (1 + b) ** b * (math.sqrt(2) / base) ** _rooted_support_size(beta, n)


def aggregation_bound(alpha: MultiGraphPair) -> float:
    """(|alpha|/2)^{|alpha|/2} max_psi |C_psi| (zero when the sides differ in size)."""
    bs = bijections(alpha)
    if not bs:
        return 0.0
    a = alpha.size
    worst = max(abs(indicator_cumulant(alpha.elements(1), psi, alpha.n)) for psi in bs)
    factor = (a / 2) ** (a / 2) if a else 1.0
    return factor * float(worst)


# ------------------------------------------------------ MMSE lower bound

def zeta(params: LowDegreeParams) -> float:
    D, rho, n = params.D, params.rho, params.n
    if rho >= 1.0:
        raise ParameterError("zeta needs rho < 1")
    if D + 1 >= n:
        raise ParameterError("zeta needs D + 1 < n")
    tail = 2.0 / (1 - (D + 1) / n) ** 2
    if params.variant == "theorem":
        r = math.sqrt(rho)
        return D ** 3 * r / (1 - r) * math.sqrt(1 + D / 2) * tail
    return D ** 3 * rho / (1 - rho) * (1 + D / 2) * tail


def trivial_mmse(n: int) -> float:
    if n < 2:
        raise ParameterError("need n >= 2")
    return 1 / n - 1 / n ** 2


def closed_form_excess(params: LowDegreeParams) -> float:
    """(2/(n-1-D)^2) z(1+z)/(1-z): the amount subtracted from the trivial MMSE."""
    z = zeta(params)
    if z >= 1:
        raise ParameterError(f"zeta = {z:.6g} >= 1: the bound is unavailable")
    return 2 / (params.n - 1 - params.D) ** 2 * z * (1 + z) / (1 - z)


def mmse_lower_bound(params: LowDegreeParams) -> float:
    if params.D > params.n - 2:
        raise ParameterError("need D <= n - 2")
    return trivial_mmse(params.n) - closed_form_excess(params)


def reduction_err_bound(eps: float) -> float:
    if not 0.0 <= eps <= 1.0:
        raise ParameterError("eps must lie in [0, 1]")
    return math.sqrt(eps)


# ---------------------------------------------------------- enumeration

def multisets(n: int, size: int) -> Iterable[tuple[int, ...]]:
    return itertools.combinations_with_replacement(range(n_edges(n)), size)


def ws_count(n: int, D: int) -> int:
    """Number of alpha pairs with |alpha| <= D: sum_{a+b<=D} C(N+a-1, a) C(N+b-1, b)."""
    N = n_edges(n)
    return sum(math.comb(N + a - 1, a) * math.comb(N + b - 1, b)
               for a in range(D + 1) for b in range(D + 1 - a))


@dataclass(frozen=True)
class WsSum:
    total: Fraction               # sum over |alpha| <= D
    by_size: dict                 # |alpha| -> partial sum (Fraction)
    bound: Fraction               # E[x^2] - total
    count: int                    # alphas enumerated

    @property
    def value(self) -> float:
        return float(self.total)

    @property
    def excess(self) -> Fraction:
        """Part of the sum with |alpha| >= 1."""
        return self.total - self.by_size.get(0, Fraction(0))


def ws_truncated_sum(n: int, rho: float, D: int) -> WsSum:
    """Exhaustive sum of (rho/(1-rho))^|alpha| kappa^2 / alpha! over |alpha| <= D (p = 2)."""
    if n > 6:
        raise GuardError("ws_truncated_sum is limited to n <= 6")
    if D > 2 or D < 0:
        raise GuardError("ws_truncated_sum is limited to 0 <= D <= 2")
    if not 0.0 <= rho < 1.0:
        raise ParameterError("need 0 <= rho < 1")
    r = Fraction(rho)
    w = r / (1 - r)
    by_size: dict[int, Fraction] = {}
    count = 0
    for a in range(D + 1):
        for b in range(D + 1 - a):
            for m1 in multisets(n, a):
                for m2 in multisets(n, b):
                    alpha = MultiGraphPair(_counts(m1), _counts(m2), n)
                    k = kappa_fraction(alpha, max_size=D, max_n=6)
                    term = w ** alpha.size * k * k / alpha.factorial
                    by_size[alpha.size] = by_size.get(alpha.size, Fraction(0)) + term
                    count += 1
    total = sum(by_size.values(), Fraction(0))
    return WsSum(total, dict(sorted(by_size.items())), Fraction(1, n) - total, count)


def _counts(edges: Iterable[int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for e in edges:
        out[e] = out.get(e, 0) + 1
    return out


def canonical_multigraph(edges: Sequence[int], n: int) -> tuple[int, ...]:
    """Smallest relabeling of an edge multiset under node permutations fixing node 0.

    Non-root support nodes are mapped onto ``1..k`` in every order; the
    lexicographically smallest sorted edge tuple is the canonical form.
    """
    pairs = [edge_of_index(int(e), n) for e in edges]
    nodes = sorted(support_of(edges, n) - {0})
    best = None
    for order in itertools.permutations(range(1, len(nodes) + 1)):
        relabel = dict(zip(nodes, order))
        relabel[0] = 0
        cand = tuple(sorted(edge_index(relabel[u], relabel[v], n) for u, v in pairs))
        if best is None or cand < best:
            best = cand
    return best if best is not None else ()


@lru_cache(maxsize=None)
def multigraph_classes(n: int, size: int) -> tuple[tuple[int, ...], ...]:
    """Representatives of edge multisets of a given size up to relabelings fixing node 0."""
    m = min(n, 2 * size + 1)
    sub_edges = [edge_index(u, v, n) for u, v in itertools.combinations(range(m), 2)]
    reps = set()
    for combo in itertools.combinations_with_replacement(sub_edges, size):
        nodes = support_of(combo, n) - {0}
        if nodes != set(range(1, len(nodes) + 1)):
            continue
        reps.add(canonical_multigraph(combo, n))
    return tuple(sorted(reps))


def alpha_classes(n: int, max_size: int) -> list[MultiGraphPair]:
    """One representative per class of alpha with |alpha| <= max_size.

    kappa and every bound here are invariant under relabeling each side by its own
    node permutation fixing node 0, so classes factor over the two sides.
    """
    out = []
    for a in range(max_size + 1):
        for b in range(max_size + 1 - a):
            for m1 in multigraph_classes(n, a):
                for m2 in multigraph_classes(n, b):
                    out.append(MultiGraphPair(_counts(m1), _counts(m2), n))
    return out


def sub_multisets(elements: Sequence[int]) -> list[tuple[int, ...]]:
    """All distinct sub-multisets of a multiset given as an element list."""
    seen = set()
    for r in range(len(elements) + 1):
        for combo in itertools.combinations(sorted(elements), r):
            seen.add(combo)
    return sorted(seen, key=lambda t: (len(t), t))


@dataclass
class BoundSweep:
    n: int
    max_size: int
    classes: int = 0
    kappa_violations: int = 0
    zero_violations: int = 0
    moment_violations: int = 0
    moment_free_violations: int = 0
    indicator_violations: int = 0
    aggregation_violations: int = 0
    method_mismatches: int = 0
    vacuous_indicator_bounds: int = 0
    indicator_checks: int = 0
    max_kappa_ratio: float = 0.0

    @property
    def ok(self) -> bool:
        return not (self.kappa_violations or self.zero_violations or self.moment_violations
                    or self.moment_free_violations or self.indicator_violations
                    or self.aggregation_violations or self.method_mismatches)


def bound_sweep(n: int, max_size: int = 4, check_recursion: bool = True) -> BoundSweep:
    """Check every cumulant/moment bound on all alpha classes with |alpha| <= max_size."""
    rep = BoundSweep(n, max_size)
    for alpha in alpha_classes(n, max_size):
        rep.classes += 1
        kap = kappa_fraction(alpha, max_size=max_size)
        if check_recursion and kap != kappa_fraction(alpha, method="recursion", max_size=max_size):
            rep.method_mismatches += 1
        if alpha.size1 != alpha.size2:
            rep.zero_violations += kap != 0
            continue
        bound = cumulant_bound(alpha)
        if abs(kap) > bound * (1 + 1e-12):
            rep.kappa_violations += 1
        if bound > 0:
            rep.max_kappa_ratio = max(rep.max_kappa_ratio, abs(float(kap)) / bound)
        if abs(float(kap)) > aggregation_bound(alpha) * (1 + 1e-12) + 1e-15:
            rep.aggregation_violations += 1
        for psi in bijections(alpha):
            for beta in sub_multisets(alpha.elements(1)):
                rep.indicator_checks += 1
                if indicator_moment(beta, psi, n) > moment_bound(beta, n) * (1 + 1e-12):
                    rep.moment_violations += 1
                if beta and indicator_moment(beta, psi, n, with_x=False) > moment_bound(beta, n, with_x=False) * (1 + 1e-12):
                    rep.moment_free_violations += 1
                ib = indicator_cumulant_bound(beta, n)
                if math.isinf(ib):
                    rep.vacuous_indicator_bounds += 1
                c = indicator_cumulant(beta, psi, n)
                if abs(c) > ib * (1 + 1e-12):
                    rep.indicator_violations += 1
                if check_recursion and c != indicator_cumulant(beta, psi, n, method="recursion"):
                    rep.method_mismatches += 1
    return rep
