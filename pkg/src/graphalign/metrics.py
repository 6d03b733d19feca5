"""Alignment error up to a global relabeling, and its brute-force oracle."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import GuardError, ParameterError, PermutationTuple, as_tuple, check_permutation


@dataclass(frozen=True)
class AssignmentResult:
    psi: np.ndarray   # psi[a] = b maps estimated labels onto true labels
    matched: int
    total: int

    @property
    def err(self) -> float:
        return 1.0 - self.matched / self.total

    @property
    def err_exact(self) -> Fraction:
        return 1 - Fraction(self.matched, self.total)


def count_matrix(pi, pi_star, graphs=None) -> np.ndarray:
    """``C[a, b] = #{(j, u): pi_j(u) = a and pi*_j(u) = b}`` over the selected graphs."""
    P = as_tuple(pi).perms
    S = as_tuple(pi_star).perms
    if P.shape != S.shape:
        raise ParameterError("pi and pi_star must have the same (p, n)")
    if graphs is not None:
        P, S = P[list(graphs)], S[list(graphs)]
    n = P.shape[1]
    C = np.zeros((n, n), dtype=np.int64)
    np.add.at(C, (P.reshape(-1), S.reshape(-1)), 1)
    return C


def _assignment_value(C: np.ndarray) -> int:
    r, c = linear_sum_assignment(C, maximize=True)
    return int(C[r, c].sum())


def max_assignment(C: np.ndarray) -> tuple[np.ndarray, int]:
    """Maximum-weight assignment of an integer matrix, lexicographically smallest optimum.

    The Hungarian solve gives the optimal value; the smallest optimal ``psi`` is then
    fixed row by row, accepting the first column that keeps the optimum attainable.
    """
    n = C.shape[0]
    best = _assignment_value(C)
    psi = np.full(n, -1, dtype=np.int64)
    rows = list(range(n))
    free_cols = list(range(n))
    acquired = 0
    for a in range(n):
        rest_rows = rows[a + 1:]
        for b in free_cols:
            cols = [c for c in free_cols if c != b]
            tail = _assignment_value(C[np.ix_(rest_rows, cols)]) if rest_rows else 0
            if acquired + C[a, b] + tail == best:
                psi[a] = b
                acquired += int(C[a, b])
                free_cols = cols
                break
    return psi, best


def err(pi, pi_star) -> AssignmentResult:
    """Fraction of (graph, node) pairs misplaced after the best global relabeling."""
    pi, pi_star = as_tuple(pi), as_tuple(pi_star)
    C = count_matrix(pi, pi_star)
    psi, value = max_assignment(C)
    return AssignmentResult(psi, value, pi.n * pi.p)


def err_bruteforce(pi, pi_star, max_n: int = 7) -> AssignmentResult:
    """Oracle for :func:`err`: exhaustive minimum over all n! relabelings."""
    pi, pi_star = as_tuple(pi), as_tuple(pi_star)
    if pi.perms.shape != pi_star.perms.shape:
        raise ParameterError("pi and pi_star must have the same (p, n)")
    n, p = pi.n, pi.p
    if n > max_n:
        raise GuardError(f"brute force over {n}! relabelings refused (n > {max_n})")
    best, best_psi = -1, None
    P, S = pi.perms, pi_star.perms
    for psi in itertools.permutations(range(n)):
        psi = np.asarray(psi)
        matched = int((psi[P] == S).sum())
        if matched > best:
            best, best_psi = matched, psi
    return AssignmentResult(best_psi, best, n * p)


def hamming(sigma, tau) -> float:
    sigma = check_permutation(sigma)
    tau = check_permutation(tau, sigma.shape[0])
    return float(np.mean(sigma != tau))


def err_pair(pi, pi_star, j: int, jp: int) -> float:
    """Pairwise alignment error of graphs j and j' (best relabeling on the two only)."""
    if j == jp:
        raise ParameterError("err_pair needs two distinct graph indices")
    pi = as_tuple(pi)
    C = count_matrix(pi, pi_star, graphs=(j, jp))
    return 1.0 - _assignment_value(C) / (2 * pi.n)


def err_pair_bruteforce(pi, pi_star, j: int, jp: int) -> float:
    pi, pi_star = as_tuple(pi), as_tuple(pi_star)
    return err_bruteforce(pi.perms[[j, jp]], pi_star.perms[[j, jp]]).err


def mean_pairwise_err(pi, pi_star) -> float:
    """Average of :func:`err_pair` over ordered pairs ``j != j'``."""
    p = as_tuple(pi).p
    vals = [err_pair(pi, pi_star, a, b) for a in range(p) for b in range(p) if a != b]
    return float(np.mean(vals))


def is_exact(pi, pi_star) -> bool:
    return err(pi, pi_star).matched == as_tuple(pi).n * as_tuple(pi).p


def random_tuple_error(n: int, p: int, rng: np.random.Generator) -> float:
    """err between two independent uniform tuples."""
    return err(PermutationTuple.random(n, p, rng), PermutationTuple.random(n, p, rng)).err
