"""Evaluation metrics for estimated memberships, item parameters and K."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import islice, permutations

import numpy as np

from .errors import DataError

__all__ = [
    "AlignedError",
    "hamming_error",
    "relative_error",
    "accuracy_rate",
    "purity_proportions",
    "MAX_PERMUTATION_K",
]

MAX_PERMUTATION_K = 10
CHUNK = 100_000
SHORTLIST = 1000
HIGHLY_PURE = 0.9
HIGHLY_MIXED = 0.7


@dataclass(frozen=True)
class AlignedError:
    """Error value minimized over column permutations, with the minimizer.

    ``permutation[c]`` is the column of the truth matched to estimated
    column ``c``, i.e. the estimate is compared with ``truth[:, permutation]``.
    """

    value: float
    permutation: tuple


def _as_array(x, attr):
    return np.asarray(getattr(x, attr, x), dtype=float)


def _aligned(est, truth, column_cost, evaluate):
    k = est.shape[1]
    if k > MAX_PERMUTATION_K:
        raise DataError(f"permutation search supports K <= {MAX_PERMUTATION_K}, got {k}")
    # Screen permutations with the separable column costs, then score the
    # near-best ones directly so the value is exactly evaluate(perm).
    cost = np.array([[column_cost(est[:, a], truth[:, b]) for b in range(k)] for a in range(k)])
    rows = np.arange(k)
    best = np.inf
    shortlist = []
    it = permutations(range(k))
    while True:
        chunk = np.array(list(islice(it, CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        totals = cost[rows, chunk].sum(axis=1)
        best = min(best, float(totals.min()))
        cut = best + 1e-9 * max(1.0, abs(best))
        shortlist = [q for q in shortlist if q[0] <= cut]
        shortlist += [(float(totals[i]), tuple(chunk[i])) for i in np.flatnonzero(totals <= cut)]
        if len(shortlist) > SHORTLIST:
            shortlist = sorted(shortlist)[:SHORTLIST]
    value, perm = min((evaluate(np.array(p)), p) for _, p in shortlist)
    return AlignedError(float(value), tuple(int(c) for c in perm))


def hamming_error(pi_hat, pi_true):
    """``min_P (1/N) sum |Pi_hat - Pi P|`` over column permutations ``P``.

    The matrix norm is the entrywise sum of absolute values, so the value
    is the average per-subject l1 distance and lies in ``[0, 2]``.
    """
    a = _as_array(pi_hat, "weights")
    b = _as_array(pi_true, "weights")
    if a.shape != b.shape:
        raise DataError(f"shape mismatch: {a.shape} vs {b.shape}")
    n = a.shape[0]
    return _aligned(
        a,
        b,
        lambda u, v: np.abs(u - v).sum(),
        # fsum is correctly rounded, so the value does not depend on column order
        lambda p: math.fsum(np.abs(a - b[:, p]).ravel()) / n,
    )


def relative_error(theta_hat, theta_true):
    """``min_P |Theta_hat - Theta P|_F / |Theta|_F`` over column permutations."""
    a = _as_array(theta_hat, "theta")
    b = _as_array(theta_true, "theta")
    if a.shape != b.shape:
        raise DataError(f"shape mismatch: {a.shape} vs {b.shape}")
    denom = math.sqrt(math.fsum((b * b).ravel()))
    if denom == 0:
        raise DataError("true item parameters are all zero")
    return _aligned(
        a,
        b,
        lambda u, v: np.sum((u - v) ** 2),
        lambda p: math.sqrt(math.fsum(((a - b[:, p]) ** 2).ravel())) / denom,
    )


def accuracy_rate(estimates, k_true):
    """Fraction of trials whose estimated K equals ``k_true``."""
    est = list(estimates)
    if not est:
        raise DataError("no estimates given")
    return sum(1 for e in est if e == k_true) / len(est)


def purity_proportions(pi_hat):
    """Shares of highly pure (row max >= 0.9) and highly mixed (<= 0.7) subjects.

    Returns
    -------
    mu, nu : float
    """
    w = _as_array(pi_hat, "weights")
    top = w.max(axis=1)
    n = w.shape[0]
    return float(np.count_nonzero(top >= HIGHLY_PURE) / n), float(np.count_nonzero(top <= HIGHLY_MIXED) / n)
