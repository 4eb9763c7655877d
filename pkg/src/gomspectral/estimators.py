"""Spectral estimators for the Grade of Membership model.

Four fits share one recovery tail (clip, row-normalize, least squares for the
item parameters) and differ in how they embed the subjects and hunt vertices:

========  ==============================================  ===============
method    embedding                                       vertex hunting
========  ==============================================  ===============
SRSC      ``D_tau^{1/2} U`` from the regularized Laplacian  successive projection
CRSC      row-normalized ``U`` from the regularized Laplacian  SVM-cone
SSC       ``U`` from the SVD of ``R`` itself                 successive projection
SRM       rows of ``R`` (no SVD)                           successive projection
========  ==============================================  ===============

All four accept either observed responses or a noiseless real matrix, in
which case they reproduce the generating parameters exactly.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import EstimationResult, ItemParams, MembershipMatrix, ResponseMatrix, as_dense
from .errors import DataError, NumericalError
from .linalg import (
    SVD_TOL,
    RankDeficiencyWarning,
    default_tau,
    regularized_laplacian,
    row_normalize,
    scale_rows,
    solve_k_by_k,
    truncated_svd,
)
from .vertex import successive_projection, svm_cone

__all__ = [
    "FitConfig",
    "memberships_from_weights",
    "item_params",
    "fit_gom_srsc",
    "fit_gom_crsc",
    "fit_gom_ssc",
    "fit_gom_srm",
    "fit",
    "FITTERS",
]

# margin slack picked by "auto": exact inputs get a razor-thin window
NOISELESS_SLACK = 1e-6
NOISY_SLACK = 0.5
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class FitConfig:
    """Settings shared by the four fits.

    ``tau="auto"`` resolves to ``M * max(N, J)``.  ``margin_slack="auto"``
    resolves to 1e-6 for real-valued (noiseless) input and 0.5 for
    observed responses.  ``margin_slack`` and ``cone_representative`` are
    used by CRSC only (see :func:`~gomspectral.vertex.svm_cone`).
    """

    k: int
    tau: Union[float, str] = "auto"
    svd_tol: float = SVD_TOL
    margin_slack: Union[float, str] = "auto"
    cone_representative: str = "centroid"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DataError(f"k must be a positive integer, got {self.k!r}")
        if self.tau != "auto" and not float(self.tau) >= 0:
            raise DataError(f"tau must be >= 0 or 'auto', got {self.tau!r}")
        if self.margin_slack != "auto" and not float(self.margin_slack) >= 0:
            raise DataError(f"margin_slack must be >= 0 or 'auto', got {self.margin_slack!r}")
        if self.cone_representative not in ("centroid", "margin"):
            raise DataError(f"cone_representative must be 'centroid' or 'margin', got {self.cone_representative!r}")

    def resolve_tau(self, r):
        return default_tau(r) if self.tau == "auto" else float(self.tau)

    def resolve_slack(self, r):
        if self.margin_slack != "auto":
            return float(self.margin_slack)
        return NOISY_SLACK if isinstance(r, ResponseMatrix) else NOISELESS_SLACK


def memberships_from_weights(z):
    """Clip negatives to zero and scale each row to unit 1-norm.

    Rows whose clipped 1-norm is below 1e-12 become the uniform row.

    Returns
    -------
    MembershipMatrix
    degenerate : tuple of int
        Rows that fell back to the uniform membership.
    """
    z = np.maximum(np.asarray(z, dtype=float), 0.0)
    if not np.all(np.isfinite(z)):
        raise DataError("weights contain non-finite values")
    k = z.shape[1]
    l1 = z.sum(axis=1)
    bad = l1 < DEGENERATE_TOL
    out = np.empty_like(z)
    out[~bad] = z[~bad] / l1[~bad, None]
    out[bad] = 1.0 / k
    return MembershipMatrix(out), tuple(int(i) for i in np.flatnonzero(bad))


def item_params(r, pi_hat, m_max=None):
    """Least-squares item parameters ``R' Pi (Pi' Pi)^{-1}`` clipped to ``[0, M]``."""
    x, m = as_dense(r)
    m = m if m_max is None else m_max
    pi = pi_hat.weights if isinstance(pi_hat, MembershipMatrix) else np.asarray(pi_hat, dtype=float)
    if pi.shape[0] != x.shape[0]:
        raise DataError("pi_hat and r disagree on N")
    gram = pi.T @ pi
    rhs = pi.T @ x  # K x J
    sol, _ = solve_k_by_k(gram, rhs, stage="item-parameters")
    return ItemParams(np.clip(sol.T, 0.0, m), m_max=m)


def _right_solve(a, pivot, stage):
    """``a @ inv(pivot)`` through the conditioned small solver."""
    sol, _ = solve_k_by_k(pivot.T, a.T, stage=stage)
    return sol.T


def _svd(x, k, tol, stage):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RankDeficiencyWarning)
        try:
            f = truncated_svd(x, k, tol=tol)
        except NumericalError as exc:
            exc.stage = exc.stage or stage
            raise
    notes = tuple(str(w.message) for w in caught if issubclass(w.category, RankDeficiencyWarning))
    if not f.sigma[-1] > 0:
        raise NumericalError(f"sigma_{k} is zero", stage=stage)
    return f, notes


def _finish(r, z, index_set, sigma, method, tau, start, notes=()):
    pi, degenerate = memberships_from_weights(z)
    theta = item_params(r, pi)
    ids = r.row_ids if isinstance(r, ResponseMatrix) else None
    return EstimationResult(
        pi_hat=pi,
        theta_hat=theta,
        index_set=tuple(index_set),
        singular_values=sigma,
        method=method,
        tau=tau,
        elapsed=time.perf_counter() - start,
        subject_ids=ids,
        degenerate_rows=degenerate,
        warnings=notes,
    )


def _check_k(x, k):
    n, j = x.shape
    if k > min(n, j):
        raise DataError(f"k = {k} exceeds min(N, J) = {min(n, j)}")


def fit_gom_srsc(r, cfg):
    """Simplex regularized spectral clustering.

    ``L_tau -> top-K SVD -> U_tau = D_tau^{1/2} U -> SP -> Z -> Pi, Theta``.
    """
    start = time.perf_counter()
    x, _ = as_dense(r)
    _check_k(x, cfg.k)
    tau = cfg.resolve_tau(r)
    lap = regularized_laplacian(r, tau)
    f, notes = _svd(lap.l_tau, cfg.k, cfg.svd_tol, "svd")
    u_tau = scale_rows(f.u, lap.d_tau_sqrt)
    idx = successive_projection(u_tau, cfg.k).as_array()
    z = _right_solve(u_tau, u_tau[idx], "memberships")
    return _finish(r, z, idx, f.sigma, "SRSC", tau, start, notes)


def fit_gom_crsc(r, cfg):
    """Cone regularized spectral clustering.

    ``L_tau -> top-K SVD -> U_* = D_U U -> SVM-cone -> Z_* -> Pi, Theta`` with
    ``Z_* = U U_*(I,:)^{-1} D_U(I,I) D_tau^{-1/2}(I,I)``.
    """
    start = time.perf_counter()
    x, _ = as_dense(r)
    _check_k(x, cfg.k)
    tau = cfg.resolve_tau(r)
    lap = regularized_laplacian(r, tau)
    f, notes = _svd(lap.l_tau, cfg.k, cfg.svd_tol, "svd")
    u_star, d_u = row_normalize(f.u)
    idx = svm_cone(u_star, cfg.k, cfg.resolve_slack(r), cfg.cone_representative).as_array()
    z = _right_solve(f.u, u_star[idx], "memberships")
    z = z * (d_u[idx] / lap.d_tau_sqrt[idx])[None, :]
    return _finish(r, z, idx, f.sigma, "CRSC", tau, start, notes)


def fit_gom_ssc(r, cfg):
    """Simplex spectral clustering on the top-K SVD of ``R`` itself."""
    start = time.perf_counter()
    x, _ = as_dense(r)
    _check_k(x, cfg.k)
    f, notes = _svd(x, cfg.k, cfg.svd_tol, "svd")
    idx = successive_projection(f.u, cfg.k).as_array()
    z = _right_solve(f.u, f.u[idx], "memberships")
    return _finish(r, z, idx, f.sigma, "SSC", None, start, notes)


def fit_gom_srm(r, cfg):
    """Successive projection straight on the rows of ``R``; no SVD.

    ``Z = R R(I,:)' (R(I,:) R(I,:)')^{-1}``.  The reported singular values are
    those of the ``K x J`` vertex block ``R(I,:)``.
    """
    start = time.perf_counter()
    x, _ = as_dense(r)
    _check_k(x, cfg.k)
    idx = successive_projection(x, cfg.k).as_array()
    corners = x[idx]
    z = _right_solve(x @ corners.T, corners @ corners.T, "memberships")
    sigma = np.linalg.svd(corners, compute_uv=False)
    if not sigma[-1] > 0:
        raise NumericalError("vertex block is rank deficient", stage="memberships")
    return _finish(r, z, idx, sigma, "SRM", None, start)


FITTERS = {
    "SRSC": fit_gom_srsc,
    "CRSC": fit_gom_crsc,
    "SSC": fit_gom_ssc,
    "SRM": fit_gom_srm,
}


def fit(r, method, cfg):
    """Dispatch to one of the four fits by (case-insensitive) method name."""
    try:
        fitter = FITTERS[method.upper()]
    except KeyError:
        raise DataError(f"unknown method {method!r}; choose from {sorted(FITTERS)}") from None
    if not isinstance(cfg, FitConfig):
        cfg = FitConfig(int(cfg))
    return fitter(r, cfg)
