"""Regularized Laplacian, truncated SVD and the small dense helpers shared by
every estimator."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .data import RealMatrix, ResponseMatrix, as_dense
from .errors import DataError, DegenerateRowError, IllConditionedError, SingularityError

__all__ = [
    "SvdFactors",
    "LaplacianPair",
    "RankDeficiencyWarning",
    "regularized_laplacian",
    "default_tau",
    "truncated_svd",
    "scale_rows",
    "row_normalize",
    "solve_k_by_k",
    "SVD_TOL",
    "SVD_MAX_ITER",
    "OVERSAMPLE",
    "COND_LIMIT",
]

SVD_TOL = 1e-10
SVD_MAX_ITER = 300
OVERSAMPLE = 8
SVD_SEED = 0
COND_LIMIT = 1e12
RANK_TOL = 1e-12


class RankDeficiencyWarning(UserWarning):
    """The trailing requested singular value is numerically zero."""


@dataclass(frozen=True)
class SvdFactors:
    """Rank-``k`` factorization ``u @ diag(sigma) @ v.T``.

    ``residuals`` holds the per-triplet relative residual
    ``max(|x v - s u|, |x' u - s v|) / s``; ``converged`` is False when the
    subspace iteration hit its iteration cap and the dense fallback was used.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    residuals: np.ndarray
    iterations: int = 0
    converged: bool = True
    rank_deficient: bool = False


@dataclass(frozen=True)
class LaplacianPair:
    """``l_tau = D_tau^{-1/2} R`` together with ``sqrt(D + tau)`` and ``tau``."""

    l_tau: np.ndarray
    d_tau_sqrt: np.ndarray
    tau: float
    degrees: np.ndarray


def regularized_laplacian(r, tau):
    """Divide each row of ``r`` by ``sqrt(row_sum + tau)``.

    Serves both the observed matrix ``R`` and the population matrix; the
    input can be a :class:`~gomspectral.data.ResponseMatrix`, a
    :class:`~gomspectral.data.RealMatrix` or a plain array.
    """
    tau = float(tau)
    if not tau >= 0:
        raise DataError(f"tau must be >= 0, got {tau}")
    x, _ = as_dense(r)
    if isinstance(r, ResponseMatrix):
        # integer row sums are exact; tau is added only afterwards
        degrees = np.asarray(r.values.sum(axis=1)).ravel().astype(float)
    else:
        degrees = x.sum(axis=1)
    shifted = degrees + tau
    if np.any(shifted <= 0):
        row = int(np.flatnonzero(shifted <= 0)[0])
        raise SingularityError(f"row {row} has zero degree and tau = 0", stage="laplacian")
    d_sqrt = np.sqrt(shifted)
    return LaplacianPair(x / d_sqrt[:, None], d_sqrt, tau, degrees)


def default_tau(r):
    """``M * max(N, J)``, the regularizer recommended for both Laplacian fits."""
    if isinstance(r, (ResponseMatrix, RealMatrix)):
        m = r.m_max
    else:
        _, m = as_dense(r)
    n, j = r.shape
    return float(m) * max(n, j)


def _orth(a):
    q, _ = np.linalg.qr(a)
    return q


def _fix_signs(u, v):
    # largest-magnitude entry of each left vector made positive (first index on ties)
    idx = np.argmax(np.abs(u), axis=0)
    s = np.sign(u[idx, np.arange(u.shape[1])])
    s[s == 0] = 1.0
    return u * s, v * s


def _triplet_residuals(x, u, s, v):
    s_safe = np.where(s > 0, s, 1.0)
    ru = np.linalg.norm(x @ v - u * s, axis=0)
    rv = np.linalg.norm(x.T @ u - v * s, axis=0)
    res = np.maximum(ru, rv) / s_safe
    return np.where(s > 0, res, np.where(np.maximum(ru, rv) > 0, np.inf, 0.0))


def truncated_svd(x, k, tol=SVD_TOL, max_iter=SVD_MAX_ITER):
    """Top-``k`` singular triplets by block subspace iteration.

    The block has ``k + 8`` columns (capped at ``min(N, J)``) and starts from a
    Gaussian matrix drawn from a Philox generator with seed 0, so the result
    is deterministic.  Each sweep re-orthonormalizes and extracts Ritz
    triplets; iteration stops once every triplet's relative residual is
    below ``tol``.  If ``max_iter`` sweeps do not reach ``tol`` the dense
    LAPACK SVD is used instead and ``converged`` is set to False; the same
    happens earlier once the sweeps spent exceed the cost of a dense
    factorization.  The dense SVD runs on one BLAS thread so the result does
    not depend on the thread count.

    Each left singular vector is signed so that its largest-magnitude entry is
    positive; the matching right vector is flipped along with it.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DataError("truncated_svd expects a 2-D array")
    n, j = x.shape
    k = int(k)
    if not 1 <= k <= min(n, j):
        raise DataError(f"k must be in [1, {min(n, j)}], got {k}")
    if not np.all(np.isfinite(x)):
        raise DataError("matrix contains non-finite entries")

    width = min(k + OVERSAMPLE, n, j)
    rng = np.random.Generator(np.random.Philox(SVD_SEED))
    q = _orth(x @ rng.standard_normal((j, width)))

    # past this many sweeps a dense SVD is cheaper than iterating on
    budget = max(10, (4 * min(n, j)) // (6 * width))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # Rayleigh-Ritz on the current left basis
        b = q.T @ x
        ub, s, vt = np.linalg.svd(b, full_matrices=False)
        u = q @ ub[:, :k]
        v = vt[:k].T
        s = s[:k]
        res = _triplet_residuals(x, u, s, v)
        if np.all(res <= tol):
            converged = True
            break
        if it >= budget:
            break
        q = _orth(x @ _orth(x.T @ q))

    if not converged:
        # LAPACK's divide-and-conquer SVD rounds differently with the BLAS
        # thread count; one thread keeps the output bit-stable
        with threadpool_limits(limits=1, user_api="blas"):
            uf, s, vt = np.linalg.svd(x, full_matrices=False)
        u, s, v = uf[:, :k], s[:k], vt[:k].T
        res = _triplet_residuals(x, u, s, v)

    u, v = _fix_signs(u, v)
    rank_deficient = bool(s[-1] < RANK_TOL * s[0]) if s[0] > 0 else True
    if rank_deficient:
        warnings.warn(
            f"sigma_{k} = {s[-1]:.3g} is below {RANK_TOL:g} * sigma_1", RankDeficiencyWarning, stacklevel=2
        )
    return SvdFactors(u, s, v, res, iterations=it, converged=converged, rank_deficient=rank_deficient)


def scale_rows(u, scale):
    """Multiply row ``i`` of ``u`` by ``scale[i]`` (all scales must be positive)."""
    u = np.asarray(u, dtype=float)
    scale = np.asarray(scale, dtype=float)
    if scale.shape != (u.shape[0],):
        raise DataError(f"scale has shape {scale.shape}, expected ({u.shape[0]},)")
    if np.any(~(scale > 0)):
        raise DataError("row scales must be strictly positive")
    return u * scale[:, None]


def row_normalize(u):
    """Scale every row to unit Euclidean norm.

    Returns
    -------
    u_star : ndarray
        Row-normalized copy of ``u``.
    d_u : ndarray
        ``1 / ||u[i]||`` for each row.
    """
    u = np.asarray(u, dtype=float)
    norms = np.linalg.norm(u, axis=1)
    small = np.flatnonzero(norms < 1e-300)
    if small.size:
        raise DegenerateRowError(f"row {int(small[0])} has zero norm", row=int(small[0]), stage="row-normalize")
    d_u = 1.0 / norms
    return u * d_u[:, None], d_u


def solve_k_by_k(a, b, stage=None):
    """Solve ``a @ x = b`` for a small square ``a``.

    Returns ``(x, cond)`` where ``cond`` is the 2-norm condition number of
    ``a``.  Raises :class:`IllConditionedError` when ``cond > 1e12``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"a must be square, got shape {a.shape}")
    if a.shape[0] > 64:
        raise DataError("solve_k_by_k is meant for K <= 64")
    with np.errstate(divide="ignore", invalid="ignore"):
        sv = np.linalg.svd(a, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(f"condition number {cond:.3g} exceeds {COND_LIMIT:g}", condition=cond, stage=stage)
    return np.linalg.solve(a, b), cond
