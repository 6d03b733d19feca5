"""Covariance structure, likelihood ratios, KL divergences and Fano-type lower bounds.

The KL routines work with tuples of the form ``(id, ..., id, pi_p)``: all graphs
but the last one are left in place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alignment import build_edge_alignment
from .core import (
    STREAM_KL,
    GuardError,
    ParameterError,
    PermutationTuple,
    ProblemParams,
    as_tuple,
    check_permutation,
    edge_permutation,
    n_edges,
    sample_conditional,
    substream,
)

DENSE_COV_LIMIT = 2048
_MC_CHUNK = 10_000


def _need_rho_below_one(rho: float) -> None:
    if rho >= 1.0:
        raise ParameterError("rho = 1 makes the covariance singular; precision and KL are unavailable")


def _kl_unit(p: int, rho: float) -> float:
    """KL contributed by a single moved edge."""
    return rho * rho * (p - 1) / ((1 - rho) * (1 + rho * (p - 1)))


# ------------------------------------------------------------- covariance

@dataclass(frozen=True)
class CovariancePair:
    """``Sigma = s_I I + s_B (pB)`` and ``Sigma^{-1} = q_I I + q_B (pB)``."""

    pi: PermutationTuple
    params: ProblemParams
    sigma_I: float
    sigma_B: float
    precision_I: float | None
    precision_B: float | None

    @property
    def dim(self) -> int:
        return self.params.p * self.params.N

    def _pB(self):
        # p * B as a sparse 0/1 matrix
        return build_edge_alignment(self.pi).integer_matrix().astype(np.float64)

    def _dense(self, cI, cB) -> np.ndarray:
        if self.dim > DENSE_COV_LIMIT:
            raise GuardError(f"dense covariance of size {self.dim} exceeds {DENSE_COV_LIMIT}")
        return cI * np.eye(self.dim) + cB * self._pB().toarray()

    def sigma_dense(self) -> np.ndarray:
        return self._dense(self.sigma_I, self.sigma_B)

    def precision_dense(self) -> np.ndarray:
        if self.precision_I is None:
            raise ParameterError("precision unavailable at rho = 1")
        return self._dense(self.precision_I, self.precision_B)

    def apply_precision(self, g: np.ndarray) -> np.ndarray:
        """``Sigma^{-1} g`` for a flattened ``(p*N,)`` vector."""
        if self.precision_I is None:
            raise ParameterError("precision unavailable at rho = 1")
        return self.precision_I * g + self.precision_B * (self._pB() @ g)


def build_covariance(pi, params: ProblemParams) -> CovariancePair:
    pi = as_tuple(pi)
    if (pi.p, pi.n) != (params.p, params.n):
        raise ParameterError("tuple does not match params")
    rho, p = params.rho, params.p
    if rho < 1.0:
        qI = 1.0 / (1.0 - rho)
        qB = -rho / ((1.0 - rho) * (1.0 + (p - 1) * rho))
    else:
        qI = qB = None
    return CovariancePair(pi, params, 1.0 - rho, rho, qI, qB)


# ------------------------------------------------------------- likelihood

def _last_perm(pi_p, n: int) -> np.ndarray:
    return check_permutation(pi_p, n)


def log_likelihood_ratio(G, pi_p, params: ProblemParams) -> float | np.ndarray:
    """``log dP_(id,..,id,pi_p) / dP_id`` at ``G``.

    ``G`` may carry leading batch axes (shape ``(..., p, N)``); one value is
    returned per stack.
    """
    _need_rho_below_one(params.rho)
    W = np.asarray(getattr(G, "weights", G), dtype=np.float64)
    p, rho = params.p, params.rho
    perm = _last_perm(pi_p, params.n)
    if W.shape[-2:] != (p, params.N):
        raise ParameterError("graph stack does not match params")
    if rho == 0.0:
        return 0.0 if W.ndim == 2 else np.zeros(W.shape[:-2])
    emap = edge_permutation(perm)
    inv = np.argsort(emap)
    head = W[..., :-1, :].sum(axis=-2)
    plain = (head + W[..., -1, :]) / p
    moved = (head + W[..., -1, inv]) / p
    coef = p * p * rho / (2 * (1 - rho) * (1 + rho * (p - 1)))
    out = coef * (moved ** 2 - plain ** 2).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def log_likelihood_ratio_dense(G, pi, params: ProblemParams) -> float:
    """Reference: ``(1/2) g^T (Sigma^{-1}(id) - Sigma^{-1}(pi)) g`` with dense matrices."""
    _need_rho_below_one(params.rho)
    g = np.asarray(getattr(G, "weights", G), dtype=np.float64).reshape(-1)
    ident = PermutationTuple.identity(params.n, params.p)
    Pid = build_covariance(ident, params).precision_dense()
    Ppi = build_covariance(pi, params).precision_dense()
    return 0.5 * float(g @ (Pid - Ppi) @ g)


# --------------------------------------------------------------------- KL

def kl_transposition(n: int, p: int, rho: float) -> float:
    """Closed form for KL when pi_p is a transposition, counting (2n-3) moved edges.

    A transposition of u and u' actually fixes the edge {u, u'}, so only 2(n-2)
    edges move; :func:`kl_transposition_exact` gives that value.
    """
    _need_rho_below_one(rho)
    return (2 * n - 3) * _kl_unit(p, rho)


def kl_transposition_exact(n: int, p: int, rho: float) -> float:
    _need_rho_below_one(rho)
    return 2 * (n - 2) * _kl_unit(p, rho)


def kl_last_coordinate(pi_p, n: int, p: int, rho: float) -> float:
    """Exact KL(P_(id,..,id,pi_p) || P_id): moved edges times the per-edge term."""
    _need_rho_below_one(rho)
    perm = _last_perm(pi_p, n)
    moved = int(np.count_nonzero(edge_permutation(perm) != np.arange(n_edges(n))))
    return moved * _kl_unit(p, rho)


def kl_dense(pi, params: ProblemParams) -> float:
    """Gaussian KL(P_pi || P_id) from dense covariance matrices (any tuple)."""
    _need_rho_below_one(params.rho)
    ident = PermutationTuple.identity(params.n, params.p)
    S_pi = build_covariance(pi, params).sigma_dense()
    S_id = build_covariance(ident, params).sigma_dense()
    P_id = build_covariance(ident, params).precision_dense()
    _, ld_pi = np.linalg.slogdet(S_pi)
    _, ld_id = np.linalg.slogdet(S_id)
    d = S_pi.shape[0]
    return 0.5 * (float(np.trace(P_id @ S_pi)) - d + ld_id - ld_pi)


def kl_upper_full(n: int, p: int, rho: float) -> float:
    _need_rho_below_one(rho)
    return n * (n - 1) * _kl_unit(p, rho)


@dataclass(frozen=True)
class KlEstimate:
    mean: float
    std_error: float
    trials: int


def kl_monte_carlo(pi_p, params: ProblemParams, trials: int, seed: int) -> KlEstimate:
    """Average log-likelihood ratio over graphs drawn with pi* = (id, .., id, pi_p)."""
    if trials < 1000:
        raise ParameterError("kl_monte_carlo needs at least 1000 trials")
    _need_rho_below_one(params.rho)
    n, p = params.n, params.p
    perm = _last_perm(pi_p, n)
    rows = np.tile(np.arange(n), (p, 1))
    rows[-1] = perm
    star = PermutationTuple(rows)
    rng = substream(seed, STREAM_KL)
    vals = np.empty(trials)
    done = 0
    while done < trials:
        m = min(_MC_CHUNK, trials - done)
        _, _, obs = sample_conditional(params, star, rng, size=m)
        vals[done:done + m] = log_likelihood_ratio(obs, perm, params)
        done += m
    se = float(vals.std(ddof=1) / math.sqrt(trials))
    return KlEstimate(float(vals.mean()), se, trials)


# ------------------------------------------------------------ Fano bounds

def fano_partial_bound(n: int, p: int, rho: float) -> float:
    """Lower bound on the expected error of any estimator (partial recovery form)."""
    denom = (n / 6) * math.log(n / 24) if n > 24 else 0.0
    if denom <= 0:
        return 0.0
    val = 0.375 * (1 - (1 + kl_upper_full(n, p, rho)) / denom)
    return min(1.0, max(0.0, val))


def fano_exact_bound(n: int, p: int, rho: float) -> float:
    """Lower bound on the failure probability of exact recovery."""
    val = 1 - (1 + kl_transposition(n, p, rho)) / math.log(n * p * (n - 1))
    return min(1.0, max(0.0, val))


def it_thresholds(n: int, p: int) -> tuple[float, float]:
    """Order-of-magnitude thresholds in rho for partial and exact recovery (no constants)."""
    if n < 2 or p < 2:
        raise ParameterError("need n >= 2 and p >= 2")
    ln, lnp = math.log(n), math.log(n * p)
    partial = max(ln / n, math.sqrt(ln / (n * p)))
    exact = max(lnp / n, math.sqrt(lnp / (n * p)))
    return partial, exact
