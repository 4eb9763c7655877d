"""Vertex hunting: locate the rows that span a simplex or a cone.

Two routines are provided.  :func:`successive_projection` is the greedy
projection method for simplex-shaped point clouds.  :func:`svm_cone` handles
points on the unit sphere that fill a cone.  It places a supporting hyperplane
with :func:`one_class_hyperplane`, keeps the rows closest to that hyperplane,
and picks one corner per k-means group.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, InsufficientCornersError, NoConeError, RankDeficiencyError

__all__ = [
    "IndexSet",
    "successive_projection",
    "one_class_hyperplane",
    "hyperplane_kkt_residual",
    "svm_cone",
    "KMEANS_RESTARTS",
    "KMEANS_SEED",
]

KMEANS_RESTARTS = 50
KMEANS_SEED = 0
WIDEN_STEPS = 8
KKT_TOL = 1e-8
MAX_MAJOR = 1_000_000


@dataclass(frozen=True)
class IndexSet:
    """``k`` distinct row indices and the geometry they were found under."""

    indices: tuple
    geometry: str

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise DataError(f"indices must be distinct, got {idx}")
        if self.geometry not in ("simplex", "cone"):
            raise DataError(f"unknown geometry {self.geometry!r}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def as_array(self):
        return np.array(self.indices, dtype=np.intp)


def successive_projection(points, k, rank_tol=1e-12):
    """Greedy successive projection.

    ``k`` times: take the row of largest Euclidean norm in the residual,
    then project every row onto the orthogonal complement of that row.
    Ties go to the lowest index.

    Parameters
    ----------
    points : array_like, shape (N, d)
    k : int
        Number of vertices wanted, ``k <= min(N, d)``.
    rank_tol : float
        A pick whose residual norm falls below ``rank_tol`` times the
        largest original row norm raises :class:`RankDeficiencyError`.

    Returns
    -------
    IndexSet
        Original row indices in pick order.
    """
    y = np.array(points, dtype=float)
    n = y.shape[0]
    k = int(k)
    if k < 1 or k > n:
        raise DataError(f"k must be in [1, {n}], got {k}")
    norms2 = np.einsum("ij,ij->i", y, y)
    scale = np.sqrt(norms2.max()) if n else 0.0
    picked = []
    for step in range(k):
        i = int(np.argmax(norms2))
        top = np.sqrt(norms2[i])
        if not top > rank_tol * scale or i in picked:
            raise RankDeficiencyError(
                f"residual norm {top:.3g} vanished after {step} of {k} picks", stage="successive-projection"
            )
        picked.append(i)
        u = y[i] / top
        y -= np.outer(y @ u, u)
        norms2 = np.einsum("ij,ij->i", y, y)
        # exact zeros keep picked rows from being chosen again
        norms2[picked] = 0.0
    return IndexSet(tuple(picked), "simplex")


def _min_norm_point(x, tol=1e-14, max_major=MAX_MAJOR):
    """Point of ``conv(rows of x)`` closest to the origin (Wolfe's method).

    Returns the point and the convex weights over a corral of rows.
    """
    sq = np.einsum("ij,ij->i", x, x)
    scale = sq.max()
    first = int(np.argmin(sq))
    corral = [first]
    lam = np.array([1.0])
    p = x[first].copy()

    for _ in range(max_major):
        pp = p @ p
        if pp <= 1e-24 * scale:
            raise NoConeError("the origin lies in the convex hull of the points", stage="svm-cone")
        gaps = x @ p
        j = int(np.argmin(gaps))
        if gaps[j] >= pp - tol * scale or j in corral:
            return p, corral, lam
        corral.append(j)
        lam = np.append(lam, 0.0)
        # minor cycle: affine minimizer of the corral, stepping back into the hull when needed
        while True:
            s = x[corral]
            m = len(corral)
            kkt = np.zeros((m + 1, m + 1))
            kkt[:m, :m] = s @ s.T
            kkt[:m, m] = 1.0
            kkt[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[m] = 1.0
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            mu = sol[:m]
            if np.all(mu > 1e-14):
                lam = mu
                p = mu @ s
                break
            neg = mu <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, np.nan_to_num(lam / (lam - mu), nan=0.0), np.inf)
            theta = float(min(1.0, ratios.min()))
            lam = lam + theta * (mu - lam)
            keep = lam > 1e-14
            if not keep.any():
                keep[int(np.argmax(lam))] = True
            corral = [c for c, kp in zip(corral, keep) if kp]
            lam = lam[keep]
            lam = lam / lam.sum()
            p = lam @ x[corral]
            if j not in corral and theta == 0.0:
                # the entering row cannot improve p: converged to rounding level
                return p, corral, lam
    raise NoConeError(f"minimum-norm iteration did not settle in {max_major} steps", stage="svm-cone")


def hyperplane_kkt_residual(points, w, alpha):
    """KKT residual of ``min 0.5|w|^2  s.t.  <w, x_i> >= 1``.

    Largest of primal infeasibility, stationarity error ``|w - X' alpha|``,
    dual infeasibility and complementary slackness.
    """
    x = np.asarray(points, dtype=float)
    margins = x @ w
    primal = max(0.0, float(1.0 - margins.min()))
    station = float(np.linalg.norm(w - x.T @ alpha))
    dual = max(0.0, float(-alpha.min()))
    slack = float(np.max(np.abs(alpha * (margins - 1.0))))
    return max(primal, station, dual, slack)


def one_class_hyperplane(points, return_dual=False):
    """Hard-margin one-class SVM through the origin.

    Solves ``minimize 0.5 |w|^2  subject to  <w, x_i> >= 1`` for every row.
    The optimum is ``p / |p|^2`` where ``p`` is the point of the convex hull
    of the rows nearest the origin, found exactly by Wolfe's
    minimum-norm-point method.

    Returns
    -------
    w : ndarray, shape (d,)
    margins : ndarray, shape (N,)
        ``<w, x_i>``; the rows with margin 1 are the support vectors.
    alpha : ndarray, shape (N,)
        Dual multipliers, returned only when ``return_dual`` is true.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("points must be a nonempty 2-D array")
    norms = np.linalg.norm(x, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise DataError("one_class_hyperplane expects unit-norm rows")
    p, corral, lam = _min_norm_point(x)
    pp = p @ p
    w = p / pp
    alpha = np.zeros(x.shape[0])
    alpha[corral] = lam / pp
    margins = x @ w
    kkt = hyperplane_kkt_residual(x, w, alpha)
    if kkt > KKT_TOL * max(1.0, float(np.linalg.norm(w))):
        raise NoConeError(f"hyperplane KKT residual {kkt:.3g} above tolerance", stage="svm-cone")
    if return_dual:
        return w, margins, alpha
    return w, margins


def _kmeans_labels(x, k):
    from sklearn.cluster import KMeans

    with warnings.catch_warnings():
        # fewer distinct points than clusters is reported through the label count instead
        warnings.simplefilter("ignore")
        km = KMeans(n_clusters=k, init="k-means++", n_init=KMEANS_RESTARTS, random_state=KMEANS_SEED)
        return km.fit_predict(x)


def svm_cone(points, k, margin_slack=1e-6, representative="centroid"):
    """Find ``k`` corner rows of a cone of unit vectors.

    1. Fit :func:`one_class_hyperplane` to the rows.
    2. Keep as candidates the rows with margin at most
       ``(1 + margin_slack) * min(margin)``.
    3. Split the candidates into ``k`` groups by k-means (k-means++ seeding,
       seed 0, 50 restarts, best inertia).
    4. Return one member of each group: the one nearest the group mean
       (``representative="centroid"``) or the one of smallest margin
       (``"margin"``).  Lowest index wins ties.

    On exact cone data every group is a set of copies of one extreme ray and
    both rules agree.  On noisy data the smallest-margin member is the most
    extreme, hence noisiest, point of its group; the centroid rule averages
    that noise away.

    When fewer than ``k`` groups can be formed, ``margin_slack`` is doubled,
    up to 8 times, before :class:`InsufficientCornersError` is raised.
    """
    if representative not in ("centroid", "margin"):
        raise DataError(f"unknown representative rule {representative!r}")
    x = np.asarray(points, dtype=float)
    n = x.shape[0]
    k = int(k)
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    if n < k:
        raise InsufficientCornersError(f"{n} rows cannot supply {k} corners", stage="svm-cone")
    _, margins = one_class_hyperplane(x)
    lowest = margins.min()

    if k == 1:
        return IndexSet((int(np.argmin(margins)),), "cone")

    slack = float(margin_slack)
    for _ in range(WIDEN_STEPS + 1):
        cand = np.flatnonzero(margins <= (1.0 + slack) * lowest)
        if cand.size >= k:
            labels = _kmeans_labels(x[cand], k)
            if np.unique(labels).size == k:
                picks = []
                for g in range(k):
                    members = cand[labels == g]
                    if representative == "centroid":
                        score = -(x[members] @ x[members].mean(axis=0))
                    else:
                        score = margins[members]
                    # argmin returns the first (lowest-index) of tied members
                    picks.append(int(members[np.argmin(score)]))
                order = np.argsort(margins[picks], kind="stable")
                return IndexSet(tuple(picks[i] for i in order), "cone")
        slack *= 2.0
    raise InsufficientCornersError(
        f"could not form {k} candidate groups (final margin slack {slack / 2:.3g})", stage="svm-cone"
    )
