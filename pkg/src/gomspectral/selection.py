"""Fuzzy modularity of a soft partition and modularity-based choice of K."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import as_dense
from .errors import DataError, DegenerateInputError, GomError, SelectionError
from .estimators import FitConfig, fit

__all__ = [
    "ModularityCurve",
    "adjacency",
    "fuzzy_modularity",
    "modularity",
    "select_k",
    "write_curve",
    "DEFAULT_K_MAX",
]

DEFAULT_K_MAX = 12


@dataclass(frozen=True)
class ModularityCurve:
    """Modularity ``Q(k)`` over a scan of ``k`` and its maximizer.

    Failed fits carry ``-inf``; the reason is kept in ``failures``.
    """

    k_values: tuple
    q_values: tuple
    argmax_k: int
    failures: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.k_values) != len(self.q_values):
            raise DataError("k_values and q_values differ in length")


def _weights(pi_hat):
    return np.asarray(getattr(pi_hat, "weights", pi_hat), dtype=float)


def adjacency(r):
    """``A = R R'`` with degrees ``d = A 1`` and total weight ``omega = sum(d)``."""
    x, _ = as_dense(r)
    a = x @ x.T
    d = a.sum(axis=1)
    omega = float(d.sum())
    if not omega > 0:
        raise DegenerateInputError("all-zero data: total adjacency weight is 0")
    return a, d, omega


def fuzzy_modularity(a, d, omega, pi_hat, include_diagonal=True):
    """Fuzzy modularity of ``pi_hat`` on the adjacency matrix ``a``.

    ``Q = (1/omega) sum_{i, i'} (A[i, i'] - d_i d_i' / omega) <Pi[i], Pi[i']>``,
    with the diagonal ``i = i'`` included.  Evaluated as
    ``(tr(Pi' A Pi) - |Pi' d|^2 / omega) / omega``.  A single class gives
    exactly 0.

    With ``include_diagonal=False`` the self-loops are removed first: the
    diagonal of ``a`` is zeroed and ``d`` and ``omega`` are recomputed from
    what is left.
    """
    w = _weights(pi_hat)
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    if a.shape != (w.shape[0], w.shape[0]) or d.shape != (w.shape[0],):
        raise DataError("adjacency, degrees and memberships disagree in size")
    if not include_diagonal:
        a = a - np.diag(np.diag(a))
        d = a.sum(axis=1)
        omega = float(d.sum())
    if not omega > 0:
        raise DataError("omega must be positive")
    if w.shape[1] == 1:
        return 0.0
    inner = float(np.einsum("ik,ik->", w, a @ w))
    pd = w.T @ d
    return (inner - float(pd @ pd) / omega) / omega


def modularity(r, pi_hat, include_diagonal=True):
    """Fuzzy modularity of ``pi_hat`` on ``A = R R'`` without forming ``A``.

    Uses ``tr(Pi' R R' Pi) = |R' Pi|_F^2`` and ``d = R (R' 1)``, so memory
    stays ``O(NJ + NK)``.  ``include_diagonal`` is as in
    :func:`fuzzy_modularity`; the diagonal of ``A`` is ``|R[i]|^2``.
    """
    x, _ = as_dense(r)
    w = _weights(pi_hat)
    if w.shape[0] != x.shape[0]:
        raise DataError("memberships and responses disagree on N")
    col = x.sum(axis=0)
    d = x @ col
    diag = np.einsum("ij,ij->i", x, x) if not include_diagonal else None
    if diag is not None:
        d = d - diag
    omega = float(d.sum())
    if not omega > 0:
        raise DegenerateInputError("total adjacency weight is 0")
    if w.shape[1] == 1:
        return 0.0
    rp = x.T @ w
    inner = float(np.einsum("jk,jk->", rp, rp))
    if diag is not None:
        inner -= float(diag @ np.einsum("ik,ik->i", w, w))
    pd = w.T @ d
    return (inner - float(pd @ pd) / omega) / omega


def select_k(r, method="CRSC", k_min=1, k_max=DEFAULT_K_MAX, cfg=None, include_diagonal=True):
    """Scan ``k_min..k_max``, fit ``method`` at every ``k`` and keep the ``k``
    with the largest fuzzy modularity (smallest ``k`` on ties).

    ``k_max`` is capped at ``min(N, J)``.  A fit that raises records
    ``Q = -inf``; if every fit fails :class:`SelectionError` is raised.
    """
    x, _ = as_dense(r)
    k_cap = min(x.shape)
    k_min, k_max = int(k_min), min(int(k_max), k_cap)
    if not 1 <= k_min <= k_max:
        raise DataError(f"need 1 <= k_min <= k_max <= {k_cap}, got {k_min}..{k_max}")
    base = cfg if cfg is not None else FitConfig(k_min)
    ks, qs, failures = [], [], {}
    for k in range(k_min, k_max + 1):
        try:
            res = fit(r, method, replace(base, k=k))
            q = modularity(r, res.pi_hat, include_diagonal)
        except GomError as exc:
            failures[k] = f"{type(exc).__name__}: {exc}"
            q = -math.inf
        ks.append(k)
        qs.append(q)
    if all(q == -math.inf for q in qs):
        raise SelectionError(f"every fit failed for k in {k_min}..{k_max}: {failures}", stage="select-k")
    best = int(np.argmax(qs))  # first maximum, i.e. the smallest k
    return ModularityCurve(tuple(ks), tuple(qs), ks[best], failures)


def write_curve(curve, path):
    """Write the ``(k, Q)`` pairs as a two-column CSV with a header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "Q"])
        for k, q in zip(curve.k_values, curve.q_values):
            w.writerow([k, repr(float(q))])
