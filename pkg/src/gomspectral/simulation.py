"""Synthetic Grade of Membership data and the simulation-study harness.

Random numbers come from numpy's Philox counter-based generator.  Every
(grid point, repetition) cell draws from
``Philox(SeedSequence(seed, spawn_key=(grid_index, rep)))``, so a cell's data
does not depend on which other cells run or in what order.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .data import ItemParams, MembershipMatrix, RealMatrix, validate_response_matrix
from .errors import DataError, GomError
from .estimators import FitConfig, fit
from .metrics import hamming_error, relative_error
from .selection import select_k

__all__ = [
    "GomInstance",
    "ExperimentConfig",
    "ExperimentRow",
    "make_rng",
    "sample_memberships",
    "sample_item_params",
    "sample_responses",
    "sample_gom",
    "run_experiment",
    "summarize",
    "write_table",
    "write_summary",
    "TABLE_COLUMNS",
    "SUMMARY_COLUMNS",
]

RANK_ATTEMPTS = 10
ALL_METHODS = ("SRSC", "CRSC", "SSC", "SRM")
# The toy experiment's matrices are only given as a picture; its instances
# follow the general recipe at the densest admissible sparsity, rho = M.
TOY_RHO = 5.0


def make_rng(seed, *spawn_key):
    """Philox generator for ``seed`` and an optional cell coordinate."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in spawn_key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class GomInstance:
    """Ground truth ``Pi``, ``Theta`` and one response draw ``r``.

    ``r`` is the raw draw, all-zero rows included; :meth:`responses` applies
    the usual cleanup and :meth:`truth_for` aligns ``Pi`` with what is left.
    """

    pi: MembershipMatrix
    theta: ItemParams
    r: np.ndarray
    rho: float
    m: int
    seed: object
    pure_rows: tuple = ()

    def population(self):
        """Noiseless expectation ``Pi Theta'`` as a :class:`RealMatrix`."""
        return RealMatrix(self.pi.weights @ self.theta.theta.T, m_max=self.m)

    def responses(self):
        return validate_response_matrix(self.r, self.m)

    def truth_for(self, resp):
        """Rows of the true ``Pi`` matching the retained rows of ``resp``."""
        return MembershipMatrix(self.pi.weights[resp.row_ids])


def sample_memberships(n, k, rng, n_pure=None, mixing="capped"):
    """Membership matrix with ``n_pure`` pure rows per class leading.

    Rows ``c * n_pure .. (c + 1) * n_pure - 1`` are pure in class ``c``;
    ``n_pure`` defaults to ``n // 4``, lowered to ``n // (k + 1)`` when
    ``k >= 4`` so that mixed rows remain.  The remaining rows are mixed:

    * ``mixing="capped"``: the first ``k - 1`` scores are
      ``Uniform(0, 1) / (k - 1)`` and the last takes up the remainder
      (for ``k = 3`` this is ``(r1, r2, 1 - r1 - r2)`` with ``r ~ U(0, 1/2)``);
    * ``mixing="dirichlet"``: uniform on the simplex.

    Returns
    -------
    pi : ndarray, shape (n, k)
    pure_rows : tuple
        One representative pure row per class (the first of each block).
    """
    if n_pure is None:
        n_pure = min(n // 4, n // (k + 1))
    n_pure = int(n_pure)
    if n_pure < 1 or k * n_pure > n:
        raise DataError(f"cannot place {n_pure} pure subjects per class for n={n}, k={k}")
    pi = np.zeros((n, k))
    n_pure_total = k * n_pure
    pi[np.arange(n_pure_total), np.arange(n_pure_total) // n_pure] = 1.0
    n_mixed = n - n_pure_total
    if n_mixed:
        if k == 1:
            pi[n_pure_total:, 0] = 1.0
        elif mixing == "capped":
            head = rng.random((n_mixed, k - 1)) / (k - 1)
            pi[n_pure_total:, : k - 1] = head
            pi[n_pure_total:, k - 1] = 1.0 - head.sum(axis=1)
        elif mixing == "dirichlet":
            pi[n_pure_total:] = rng.dirichlet(np.ones(k), size=n_mixed)
        else:
            raise DataError(f"unknown mixing {mixing!r}")
    return pi, tuple(c * n_pure for c in range(k))


def sample_item_params(j, k, rho, rng):
    """``Theta = rho * B`` where ``B`` is uniform(0, 1) rescaled to max 1.

    ``B`` is redrawn (up to 10 times) until it has full column rank.
    """
    for _ in range(RANK_ATTEMPTS):
        b = rng.random((j, k))
        b = b / b.max()
        s = np.linalg.svd(b, compute_uv=False)
        if s[-1] > 1e-10 * s[0]:
            return rho * b
    raise DataError(f"could not draw a rank-{k} item matrix in {RANK_ATTEMPTS} attempts")


def sample_responses(population, m, rng):
    """``R[i, j] ~ Binomial(m, population[i, j] / m)`` as a sum of ``m`` coin flips."""
    p = np.asarray(population, dtype=float) / m
    r = np.zeros(p.shape, dtype=np.int64)
    for _ in range(int(m)):
        r += rng.random(p.shape) < p
    return r


def sample_gom(n, j, k, m, rho, seed, n_pure=None, mixing="capped"):
    """Draw ``Pi``, ``Theta`` and a response matrix from the GoM model.

    Parameters
    ----------
    n, j, k, m : int
        Subjects, items, latent classes and response ceiling.
    rho : float
        Sparsity, the largest item parameter; ``0 < rho <= m``.
    seed : int or numpy.random.SeedSequence
    n_pure, mixing
        Passed to :func:`sample_memberships`.
    """
    if not 0 < rho <= m:
        raise DataError(f"rho must lie in (0, m={m}], got {rho}")
    rng = make_rng(seed)
    pi, pure = sample_memberships(n, k, rng, n_pure=n_pure, mixing=mixing)
    theta = sample_item_params(j, k, rho, rng)
    pop = pi @ theta.T
    if pop.min() < 0 or pop.max() > m * (1 + 1e-12):
        raise DataError("population matrix left [0, m]")
    r = sample_responses(np.clip(pop, 0, m), m, rng)
    return GomInstance(
        pi=MembershipMatrix(pi),
        theta=ItemParams(theta, m_max=m),
        r=r,
        rho=float(rho),
        m=int(m),
        seed=seed,
        pure_rows=pure,
    )


# ---------------------------------------------------------------------------
# experiments


def _frange(lo, hi, step):
    count = int(round((hi - lo) / step)) + 1
    return tuple(round(lo + i * step, 10) for i in range(count))


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation study.

    ``grid_name`` selects what the grid varies: ``"alpha"`` (``tau = alpha M
    max(N, J)``), ``"rho"``, ``"n"`` (with ``J = N / 4``) or ``"none"``.
    """

    experiment: int
    n: int
    j: int
    k: int
    m: int
    rho: float
    grid_name: str
    grid: tuple
    reps: int = 100
    methods: tuple = ALL_METHODS
    seed: int = 0
    estimate_k: bool = False
    k_range: tuple = (1, 6)
    n_pure: object = None

    def __post_init__(self):
        if self.experiment not in (1, 2, 3, 4):
            raise DataError(f"experiment must be 1-4, got {self.experiment}")
        if not self.grid:
            raise DataError("grid is empty")
        if self.reps < 1:
            raise DataError("reps must be >= 1")
        if self.grid_name not in ("alpha", "rho", "n", "none"):
            raise DataError(f"unknown grid {self.grid_name!r}")
        bad = [mth for mth in self.methods if mth not in ALL_METHODS]
        if bad or not self.methods:
            raise DataError(f"unknown methods {bad}")

    @classmethod
    def standard(cls, experiment, reps=100, seed=0, **overrides):
        """The settings of simulation studies 1-4 (K = 3, M = 4, J = N/4 unless noted)."""
        base = dict(n=800, j=200, k=3, m=4, rho=1.0, reps=reps, seed=seed)
        if experiment == 1:
            base.update(grid_name="alpha", grid=_frange(0.2, 7.0, 0.2), methods=("SRSC", "CRSC"))
        elif experiment == 2:
            base.update(grid_name="rho", grid=_frange(0.2, 3.0, 0.2))
        elif experiment == 3:
            base.update(rho=0.2, grid_name="n", grid=tuple(range(800, 8001, 800)))
        elif experiment == 4:
            base.update(n=20, j=10, k=2, m=5, rho=TOY_RHO, grid_name="none", grid=(0,),
                        estimate_k=True, k_range=(1, 10))
        else:
            raise DataError(f"experiment must be 1-4, got {experiment}")
        base.update(overrides)
        return cls(experiment=experiment, **base)

    def cell(self, value):
        """``(n, j, rho, tau)`` for one grid value; ``tau`` may be "auto"."""
        n, j, rho, tau = self.n, self.j, self.rho, "auto"
        if self.grid_name == "alpha":
            tau = float(value) * self.m * max(n, j)
        elif self.grid_name == "rho":
            rho = float(value)
        elif self.grid_name == "n":
            n, j = int(value), int(value) // 4
        return n, j, rho, tau


@dataclass(frozen=True)
class ExperimentRow:
    grid_value: float
    rep: int
    method: str
    hamming: float
    relative: float
    runtime_s: float
    k_hat: object = None
    error: str = ""


TABLE_COLUMNS = ("grid_value", "rep", "method", "hamming", "relative", "runtime_s", "k_hat", "error")
SUMMARY_COLUMNS = ("grid_value", "method", "reps", "failures", "mean_hamming", "mean_relative",
                   "mean_runtime_s", "k_accuracy")


def run_experiment(cfg, progress=None):
    """Run every (grid point, repetition, method) fit of ``cfg``.

    All methods in a cell see the same instance.  Failed fits become rows
    with NaN errors and the exception text in ``error``.

    Returns
    -------
    list of ExperimentRow
        Ordered by grid index, then repetition, then method.
    """
    rows = []
    for gi, value in enumerate(cfg.grid):
        n, j, rho, tau = cfg.cell(value)
        for rep in range(cfg.reps):
            ss = np.random.SeedSequence(int(cfg.seed), spawn_key=(gi, rep))
            inst = sample_gom(n, j, cfg.k, cfg.m, rho, ss, n_pure=cfg.n_pure)
            resp = inst.responses()
            truth = inst.truth_for(resp)
            fc = FitConfig(cfg.k, tau=tau)
            for method in cfg.methods:
                t0 = time.perf_counter()
                try:
                    res = fit(resp, method, fc)
                    runtime = time.perf_counter() - t0
                    h = hamming_error(res.pi_hat, truth).value
                    rel = relative_error(res.theta_hat, inst.theta).value
                    err = ""
                except GomError as exc:
                    runtime = time.perf_counter() - t0
                    h = rel = math.nan
                    err = f"{type(exc).__name__}: {exc}"
                k_hat = None
                if cfg.estimate_k:
                    try:
                        k_hat = select_k(resp, method, cfg.k_range[0], cfg.k_range[1], fc).argmax_k
                    except GomError:
                        k_hat = None
                rows.append(ExperimentRow(float(value), rep, method, h, rel, runtime, k_hat, err))
            if progress is not None:
                progress(gi, rep)
    return rows


def _mean(xs):
    return float(np.mean(xs)) if xs else math.nan


def summarize(rows, k_true=None):
    """Mean metrics per (grid value, method), in first-seen order.

    Failed fits are counted but left out of the means.  ``k_accuracy`` is
    the share of repetitions whose selected K equals ``k_true``.
    """
    groups = {}
    for row in rows:
        groups.setdefault((row.grid_value, row.method), []).append(row)
    out = []
    for (value, method), members in groups.items():
        ok = [r for r in members if not r.error]
        acc = math.nan
        if k_true is not None and any(r.k_hat is not None for r in members):
            acc = sum(1 for r in members if r.k_hat == k_true) / len(members)
        out.append({
            "grid_value": value,
            "method": method,
            "reps": len(members),
            "failures": len(members) - len(ok),
            "mean_hamming": _mean([r.hamming for r in ok]),
            "mean_relative": _mean([r.relative for r in ok]),
            "mean_runtime_s": _mean([r.runtime_s for r in ok]),
            "k_accuracy": acc,
        })
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(rows, path, timing=True):
    """Long-format CSV, one line per fit.  ``timing=False`` drops ``runtime_s``
    so that repeated runs are byte-identical."""
    cols = [c for c in TABLE_COLUMNS if timing or c != "runtime_s"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(getattr(row, c)) for c in cols])


def write_summary(summary, path, timing=True):
    cols = [c for c in SUMMARY_COLUMNS if timing or c != "mean_runtime_s"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in summary:
            w.writerow([_fmt(rec[c]) for c in cols])
