"""Domain types, validation and file I/O for response data and fit results."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import DataError, DegenerateInputError, FormatError, RangeError

__all__ = [
    "ResponseMatrix",
    "RealMatrix",
    "MembershipMatrix",
    "ItemParams",
    "EstimationResult",
    "METHODS",
    "SCHEMA_VERSION",
    "SPARSE_ZERO_FRACTION",
    "validate_response_matrix",
    "as_dense",
    "read_matrix",
    "write_matrix",
    "read_real_csv",
    "read_triplets",
    "write_result",
    "read_result",
]

METHODS = ("SRSC", "CRSC", "SSC", "SRM")
SCHEMA_VERSION = 1
# Above this fraction of zeros the response grid is held in CSR form.
SPARSE_ZERO_FRACTION = 0.8
ROW_SUM_TOL = 1e-12


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ResponseMatrix:
    """Observed ``N x J`` response grid with entries in ``{0, ..., m_max}``.

    ``row_ids`` holds the original (pre-cleanup) index of every retained row
    and ``dropped_rows`` the original indices of the all-zero rows removed by
    :func:`validate_response_matrix`.
    """

    values: Union[np.ndarray, sp.csr_array]
    m_max: int
    row_ids: Optional[np.ndarray] = None
    dropped_rows: tuple = ()

    def __post_init__(self):
        v = self.values
        if sp.issparse(v):
            v = sp.csr_array(v, dtype=np.int64)
            data = v.data
        else:
            v = _frozen(np.asarray(v, dtype=np.int64))
            data = v
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DegenerateInputError(f"response matrix must be 2-D and nonempty, got shape {v.shape}")
        if int(self.m_max) < 1:
            raise DataError(f"m_max must be >= 1, got {self.m_max}")
        if data.size and (data.min() < 0 or data.max() > self.m_max):
            raise RangeError("entries must lie in {0, ..., m_max}")
        row_sums = np.asarray(v.sum(axis=1)).ravel()
        if np.any(row_sums == 0):
            raise DegenerateInputError(
                f"rows {np.flatnonzero(row_sums == 0).tolist()} are entirely zero"
            )
        ids = np.arange(v.shape[0]) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        if ids.shape != (v.shape[0],):
            raise DataError("row_ids length does not match the number of rows")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "m_max", int(self.m_max))
        object.__setattr__(self, "row_ids", _frozen(ids))
        object.__setattr__(self, "dropped_rows", tuple(int(i) for i in self.dropped_rows))

    @property
    def shape(self):
        return self.values.shape

    @property
    def storage(self):
        return "sparse" if sp.issparse(self.values) else "dense"

    @property
    def zero_fraction(self):
        """Proportion of no-response (zero) entries."""
        n, j = self.shape
        nnz = self.values.nnz if sp.issparse(self.values) else np.count_nonzero(self.values)
        return 1.0 - nnz / (n * j)

    def dense(self):
        """Return the grid as a dense ``int64`` array."""
        if sp.issparse(self.values):
            return self.values.toarray()
        return self.values


@dataclass(frozen=True)
class RealMatrix:
    """Nonnegative real ``N x J`` matrix, e.g. the population matrix ``Pi Theta'``.

    Estimators accept it in place of a :class:`ResponseMatrix` so that the
    noiseless algorithms run through the same code path.
    """

    values: np.ndarray
    m_max: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise DegenerateInputError(f"matrix must be 2-D and nonempty, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0:
            raise RangeError("entries must be finite and nonnegative")
        m = self.m_max
        if m is None:
            m = max(1.0, float(np.ceil(v.max())))
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "m_max", m)

    @property
    def shape(self):
        return self.values.shape

    def dense(self):
        return self.values


def as_dense(r):
    """Return ``(float array, m_max)`` for any accepted data container."""
    if isinstance(r, (ResponseMatrix, RealMatrix)):
        return np.asarray(r.dense(), dtype=float), r.m_max
    a = np.asarray(r, dtype=float)
    if a.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got shape {a.shape}")
    return a, max(1.0, float(np.ceil(a.max()))) if a.size else 1.0


@dataclass(frozen=True)
class MembershipMatrix:
    """Row-stochastic ``N x K`` matrix of membership scores."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.size == 0:
            raise DataError(f"membership matrix must be 2-D and nonempty, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise DataError("membership matrix contains non-finite entries")
        if w.min() < 0 or w.max() > 1 + ROW_SUM_TOL:
            raise DataError("membership entries must lie in [0, 1]")
        dev = np.abs(w.sum(axis=1) - 1.0)
        if dev.max() > ROW_SUM_TOL:
            raise DataError(f"row {int(dev.argmax())} sums to {w[dev.argmax()].sum()!r}, not 1")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def shape(self):
        return self.weights.shape

    @property
    def k(self):
        return self.weights.shape[1]


@dataclass(frozen=True)
class ItemParams:
    """``J x K`` item parameter matrix ``theta`` with entries in ``[0, m_max]``.

    ``rho`` is the largest entry (the sparsity parameter) and ``b`` is
    ``theta / rho``.
    """

    theta: np.ndarray
    m_max: Optional[float] = None

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        if t.ndim != 2 or t.size == 0:
            raise DataError(f"item parameters must be 2-D and nonempty, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise DataError("item parameters contain non-finite entries")
        if t.min() < 0 or (self.m_max is not None and t.max() > self.m_max):
            raise RangeError("item parameters must lie in [0, m_max]")
        object.__setattr__(self, "theta", _frozen(t))

    @property
    def shape(self):
        return self.theta.shape

    @property
    def rho(self):
        return float(self.theta.max())

    @property
    def b(self):
        rho = self.rho
        return self.theta / rho if rho > 0 else np.zeros_like(self.theta)


@dataclass(frozen=True)
class EstimationResult:
    """Output of one fit: memberships, item parameters and diagnostics.

    ``index_set`` holds row positions (``0 <= i < N``) of the estimated pure
    subjects in pick order.  ``subject_ids`` maps every row of ``pi_hat`` back
    to its index in the original, uncleaned file.
    """

    pi_hat: MembershipMatrix
    theta_hat: ItemParams
    index_set: tuple
    singular_values: np.ndarray
    method: str
    tau: Optional[float] = None
    elapsed: float = 0.0
    subject_ids: Optional[np.ndarray] = None
    degenerate_rows: tuple = ()
    warnings: tuple = ()

    def __post_init__(self):
        n, k = self.pi_hat.shape
        idx = tuple(int(i) for i in self.index_set)
        if len(idx) != k or len(set(idx)) != k or any(i < 0 or i >= n for i in idx):
            raise DataError(f"index_set must hold {k} distinct rows in [0, {n}), got {idx}")
        sv = np.asarray(self.singular_values, dtype=float)
        if sv.size and (np.any(sv <= 0) or np.any(np.diff(sv) > 0)):
            raise DataError("singular values must be positive and non-increasing")
        if self.method not in METHODS:
            raise DataError(f"unknown method {self.method!r}")
        if self.theta_hat.shape[1] != k:
            raise DataError("pi_hat and theta_hat disagree on K")
        ids = np.arange(n) if self.subject_ids is None else np.asarray(self.subject_ids, dtype=np.int64)
        object.__setattr__(self, "index_set", idx)
        object.__setattr__(self, "singular_values", _frozen(sv))
        object.__setattr__(self, "subject_ids", _frozen(ids))
        object.__setattr__(self, "degenerate_rows", tuple(int(i) for i in self.degenerate_rows))
        object.__setattr__(self, "warnings", tuple(str(w) for w in self.warnings))

    @property
    def k(self):
        return self.pi_hat.k


def validate_response_matrix(raw, m_max, row_ids=None):
    """Check a raw integer grid and drop all-zero rows.

    Parameters
    ----------
    raw : array_like or sparse matrix, shape (N, J)
        Candidate responses.
    m_max : int
        Response ceiling ``M``.
    row_ids : array_like, optional
        Original indices of the rows of ``raw``; defaults to ``0..N-1``.

    Returns
    -------
    ResponseMatrix
        With ``dropped_rows`` listing the original indices of removed rows.
    """
    m_max = int(m_max)
    if m_max < 1:
        raise DataError(f"m_max must be >= 1, got {m_max}")
    if sp.issparse(raw):
        grid = sp.csr_array(raw)
        if grid.nnz and not np.all(np.mod(grid.data, 1) == 0):
            raise RangeError("entries must be integers")
        grid = grid.astype(np.int64)
        grid.eliminate_zeros()
        coo = grid.tocoo()
        bad = np.flatnonzero((coo.data < 0) | (coo.data > m_max))
        if bad.size:
            b = bad[0]
            i, j, e = int(coo.row[b]), int(coo.col[b]), int(coo.data[b])
            raise RangeError(f"entry ({i}, {j}) = {e} outside [0, {m_max}]", (i, j), e)
    else:
        try:
            arr = np.asarray(raw)
        except ValueError as exc:
            raise DataError(f"grid is not rectangular: {exc}") from None
        if arr.ndim != 2 or arr.dtype == object:
            raise DataError(f"grid must be rectangular 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise DegenerateInputError("empty response matrix")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.isfinite(arr)) or not np.all(np.mod(arr, 1) == 0):
                i, j = np.argwhere(~np.isfinite(arr) | (np.mod(np.nan_to_num(arr), 1) != 0))[0]
                raise RangeError(f"entry ({i}, {j}) = {arr[i, j]!r} is not an integer", (int(i), int(j)), arr[i, j])
        bad = np.argwhere((arr < 0) | (arr > m_max))
        if bad.size:
            i, j = (int(x) for x in bad[0])
            raise RangeError(f"entry ({i}, {j}) = {arr[i, j]} outside [0, {m_max}]", (i, j), arr[i, j])
        grid = arr.astype(np.int64)

    n, j = grid.shape
    ids = np.arange(n) if row_ids is None else np.asarray(row_ids, dtype=np.int64)
    row_sums = np.asarray(grid.sum(axis=1)).ravel()
    keep = row_sums > 0
    dropped = tuple(int(i) for i in ids[~keep])
    if not keep.any():
        raise DegenerateInputError("every row is entirely zero")
    grid = grid[keep] if not sp.issparse(grid) else grid[np.flatnonzero(keep)]
    ids = ids[keep]

    nnz = grid.nnz if sp.issparse(grid) else np.count_nonzero(grid)
    zero_frac = 1.0 - nnz / (grid.shape[0] * j)
    if zero_frac > SPARSE_ZERO_FRACTION:
        grid = sp.csr_array(grid)
    elif sp.issparse(grid):
        grid = grid.toarray()
    return ResponseMatrix(grid, m_max, row_ids=ids, dropped_rows=tuple(dropped))


# ---------------------------------------------------------------------------
# matrix files


def _parse_int(token, lineno):
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        pass
    try:
        x = float(token)
    except ValueError:
        raise FormatError(f"cannot parse {token!r} as a number", line=lineno) from None
    raise RangeError(f"line {lineno}: entry {token!r} is not an integer", value=x)


def _read_csv_grid(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not t.strip() for t in rec):
                continue
            rows.append([_parse_int(t, lineno) for t in rec])
            if len(rows[-1]) != len(rows[0]):
                raise FormatError(f"expected {len(rows[0])} fields, got {len(rows[-1])}", line=lineno)
    if not rows:
        raise FormatError("no data rows", line=1)
    return np.array(rows, dtype=np.int64)


def _read_mm_grid(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise FormatError("missing %%MatrixMarket banner", line=1)
    banner = lines[0].lower().split()
    if len(banner) != 5 or banner[1] != "matrix":
        raise FormatError(f"malformed banner {lines[0]!r}", line=1)
    layout, field_, symmetry = banner[2:]
    if layout not in ("coordinate", "array"):
        raise FormatError(f"unsupported layout {layout!r}", line=1)
    if field_ not in ("integer", "real", "pattern"):
        raise FormatError(f"unsupported field {field_!r}", line=1)
    if symmetry != "general":
        raise FormatError(f"unsupported symmetry {symmetry!r}", line=1)

    body = [(no, ln) for no, ln in enumerate(lines[1:], start=2) if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise FormatError("missing size line", line=len(lines))
    size_no, size_line = body[0]
    size = [_parse_int(t, size_no) for t in size_line.split()]

    def _value(tok, no):
        if field_ == "real":
            try:
                x = float(tok)
            except ValueError:
                raise FormatError(f"cannot parse {tok!r} as a number", line=no) from None
            if x != int(x):
                raise RangeError(f"line {no}: entry {tok!r} is not an integer", value=x)
            return int(x)
        return _parse_int(tok, no)

    if layout == "coordinate":
        if len(size) != 3:
            raise FormatError("coordinate size line needs 'rows cols entries'", line=size_no)
        n, j, nnz = size
        entries = body[1:]
        if len(entries) != nnz:
            raise FormatError(f"declared {nnz} entries, found {len(entries)}", line=size_no)
        rows, cols, vals = [], [], []
        for no, ln in entries:
            toks = ln.split()
            want = 2 if field_ == "pattern" else 3
            if len(toks) != want:
                raise FormatError(f"expected {want} fields, got {len(toks)}", line=no)
            i, jj = _parse_int(toks[0], no), _parse_int(toks[1], no)
            if not (1 <= i <= n and 1 <= jj <= j):
                raise FormatError(f"index ({i}, {jj}) outside {n}x{j}", line=no)
            rows.append(i - 1)
            cols.append(jj - 1)
            vals.append(1 if field_ == "pattern" else _value(toks[2], no))
        coo = sp.coo_array((np.array(vals, dtype=np.int64), (rows, cols)), shape=(n, j))
        return coo.tocsr()

    if len(size) != 2:
        raise FormatError("array size line needs 'rows cols'", line=size_no)
    n, j = size
    entries = body[1:]
    if len(entries) != n * j:
        raise FormatError(f"declared {n * j} entries, found {len(entries)}", line=size_no)
    vals = [_value(ln.split()[0], no) for no, ln in entries]
    # array layout is column-major
    return np.array(vals, dtype=np.int64).reshape((j, n)).T


def read_matrix(path, format="csv", m_max=None):
    """Read a response grid from ``path`` and validate it.

    Parameters
    ----------
    path : str or path-like
    format : {"csv", "matrix-market", "triplets"}
        ``csv`` is headerless comma-separated integers, one subject per line.
        ``matrix-market`` accepts the ``coordinate integer general`` variant
        (1-based indices); unstored entries are read as 0 (no response).
        ``triplets`` is whitespace-separated ``subject item response`` records
        (see :func:`read_triplets`).
    m_max : int, optional
        Response ceiling; defaults to the largest entry found.

    Returns
    -------
    ResponseMatrix
    """
    if format in ("csv",):
        grid = _read_csv_grid(path)
    elif format in ("matrix-market", "mm", "mtx"):
        grid = _read_mm_grid(path)
    elif format == "triplets":
        return read_triplets(path, m_max)
    else:
        raise DataError(f"unknown format {format!r}")
    if m_max is None:
        top = grid.max() if not sp.issparse(grid) else (grid.data.max() if grid.nnz else 0)
        m_max = max(1, int(top))
    return validate_response_matrix(grid, m_max)


def write_matrix(r, path, format="csv"):
    """Write a response grid in ``csv`` or ``matrix-market`` coordinate form."""
    values = r.values if isinstance(r, ResponseMatrix) else np.asarray(r)
    if format == "csv":
        dense = values.toarray() if sp.issparse(values) else np.asarray(values)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for row in dense.astype(np.int64):
                w.writerow(row.tolist())
    elif format in ("matrix-market", "mm", "mtx"):
        coo = sp.coo_array(values)
        coo.sum_duplicates()
        nz = coo.data != 0
        rows, cols, data = coo.row[nz], coo.col[nz], coo.data[nz]
        order = np.lexsort((rows, cols))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("%%MatrixMarket matrix coordinate integer general\n")
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {data.size}\n")
            for t in order:
                fh.write(f"{rows[t] + 1} {cols[t] + 1} {int(data[t])}\n")
    else:
        raise DataError(f"unknown format {format!r}")


def read_triplets(path, m_max=None, delimiter=None):
    """Read ``subject item response [extra ...]`` records into a ResponseMatrix.

    Subject and item labels are 1-based integers (the layout of rating dumps
    such as MovieLens ``u.data``); trailing fields are ignored.  The grid is
    sized by the largest labels and unlisted pairs are 0 (no response).
    """
    rows, cols, vals = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            toks = line.split(delimiter)
            if not toks or not line.strip():
                continue
            if len(toks) < 3:
                raise FormatError(f"expected at least 3 fields, got {len(toks)}", line=lineno)
            i, j, v = (_parse_int(t, lineno) for t in toks[:3])
            if i < 1 or j < 1:
                raise FormatError(f"labels must be >= 1, got ({i}, {j})", line=lineno)
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
    if not rows:
        raise FormatError("no records", line=1)
    shape = (max(rows) + 1, max(cols) + 1)
    if len(set(zip(rows, cols))) != len(rows):
        raise FormatError("duplicate (subject, item) records")
    grid = sp.coo_array((np.array(vals, dtype=np.int64), (rows, cols)), shape=shape).tocsr()
    if m_max is None:
        m_max = max(1, int(grid.data.max()))
    return validate_response_matrix(grid, m_max)


def read_real_csv(path):
    """Read a headerless CSV of real numbers (used for Pi / Theta files)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec:
                continue
            try:
                rows.append([float(t) for t in rec])
            except ValueError:
                raise FormatError("non-numeric field", line=lineno) from None
            if len(rows[-1]) != len(rows[0]):
                raise FormatError("ragged row", line=lineno)
    if not rows:
        raise FormatError("no data rows", line=1)
    return np.array(rows)


# ---------------------------------------------------------------------------
# result documents


def _check_finite(name, a):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains non-finite values")
    return a


def result_to_dict(result):
    """JSON-ready dictionary for an :class:`EstimationResult`."""
    pi = _check_finite("pi_hat", result.pi_hat.weights)
    theta = _check_finite("theta_hat", result.theta_hat.theta)
    sv = _check_finite("singular_values", result.singular_values)
    if result.tau is not None and not math.isfinite(result.tau):
        raise DataError("tau is not finite")
    return {
        "schema_version": SCHEMA_VERSION,
        "method": result.method,
        "k": result.k,
        "n": pi.shape[0],
        "j": theta.shape[0],
        "tau": None if result.tau is None else float(result.tau),
        "m_max": None if result.theta_hat.m_max is None else float(result.theta_hat.m_max),
        "elapsed": float(result.elapsed),
        "index_set": list(result.index_set),
        "singular_values": sv.tolist(),
        "subject_ids": result.subject_ids.tolist(),
        "degenerate_rows": list(result.degenerate_rows),
        "warnings": list(result.warnings),
        "pi_hat": pi.tolist(),
        "theta_hat": theta.tolist(),
    }


def result_from_dict(doc):
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {doc.get('schema_version')!r}")
    try:
        return EstimationResult(
            pi_hat=MembershipMatrix(np.array(doc["pi_hat"], dtype=float)),
            theta_hat=ItemParams(np.array(doc["theta_hat"], dtype=float), m_max=doc.get("m_max")),
            index_set=tuple(doc["index_set"]),
            singular_values=np.array(doc["singular_values"], dtype=float),
            method=doc["method"],
            tau=doc.get("tau"),
            elapsed=doc.get("elapsed", 0.0),
            subject_ids=np.array(doc["subject_ids"], dtype=np.int64),
            degenerate_rows=tuple(doc.get("degenerate_rows", ())),
            warnings=tuple(doc.get("warnings", ())),
        )
    except KeyError as exc:
        raise FormatError(f"result document lacks field {exc}") from None


def write_result(result, path):
    """Serialize ``result`` as a UTF-8 JSON document.

    Floats are written with ``repr`` precision, so a read-back is lossless.
    Non-finite values are rejected before anything touches disk.
    """
    doc = result_to_dict(result)
    text = json.dumps(doc, indent=1, allow_nan=False)
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


def read_result(path):
    """Inverse of :func:`write_result`."""
    with open(os.fspath(path), encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(exc.msg, line=exc.lineno) from None
    return result_from_dict(doc)
