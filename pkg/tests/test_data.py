import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gomspectral.data import (
    EstimationResult,
    ItemParams,
    MembershipMatrix,
    RealMatrix,
    ResponseMatrix,
    read_matrix,
    read_result,
    validate_response_matrix,
    write_matrix,
    write_result,
)
from gomspectral.errors import DataError, DegenerateInputError, FormatError, RangeError


# validate_response_matrix


def test_validate_accepts_in_range_grid():
    r = validate_response_matrix([[1, 0], [0, 2]], 2)
    np.testing.assert_array_equal(r.dense(), [[1, 0], [0, 2]])
    assert r.dropped_rows == ()
    assert r.m_max == 2


def test_validate_range_error_reports_position():
    with pytest.raises(RangeError) as info:
        validate_response_matrix([[3, 0], [0, 1]], 2)
    assert info.value.position == (0, 0)
    assert info.value.value == 3


def test_validate_negative_entry_rejected():
    with pytest.raises(RangeError):
        validate_response_matrix([[1, -1]], 2)


def test_validate_drops_zero_rows_and_reports_them():
    r = validate_response_matrix([[1, 1], [0, 0], [2, 0]], 2)
    assert r.shape == (2, 2)
    assert r.dropped_rows == (1,)
    np.testing.assert_array_equal(r.row_ids, [0, 2])
    np.testing.assert_array_equal(r.dense(), [[1, 1], [2, 0]])


def test_validate_all_zero_is_degenerate():
    with pytest.raises(DegenerateInputError):
        validate_response_matrix(np.zeros((3, 2), dtype=int), 4)


def test_validate_rejects_bad_m_max():
    with pytest.raises(DataError):
        validate_response_matrix([[1]], 0)


def test_sparse_storage_above_zero_threshold():
    raw = np.zeros((10, 10), dtype=int)
    raw[np.arange(10), np.arange(10)] = 1
    r = validate_response_matrix(raw, 1)
    assert r.storage == "sparse"
    assert sp.issparse(r.values)
    np.testing.assert_array_equal(r.dense(), raw)


def test_dense_storage_below_threshold():
    r = validate_response_matrix(np.ones((4, 4), dtype=int), 1)
    assert r.storage == "dense"


@settings(max_examples=50, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(1, 8), st.integers(1, 6)), elements=st.integers(0, 3)))
def test_validate_is_idempotent(raw):
    if not raw.any():
        return
    once = validate_response_matrix(raw, 3)
    twice = validate_response_matrix(once.dense(), 3)
    np.testing.assert_array_equal(once.dense(), twice.dense())
    assert twice.dropped_rows == ()


# read_matrix / write_matrix


def test_read_csv(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("1,0\n0,2\n")
    r = read_matrix(p, "csv", m_max=2)
    np.testing.assert_array_equal(r.dense(), [[1, 0], [0, 2]])


def test_read_csv_bad_token_names_line(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("1,x\n")
    with pytest.raises(FormatError) as info:
        read_matrix(p)
    assert info.value.line == 1


def test_read_csv_non_integer_is_range_error(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("1,0\n0,1.5\n")
    with pytest.raises(RangeError):
        read_matrix(p, m_max=2)


def test_read_csv_ragged_row(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("1,0\n0,1,1\n")
    with pytest.raises(FormatError) as info:
        read_matrix(p)
    assert info.value.line == 2


def test_read_matrix_market_unstored_are_zero(tmp_path):
    p = tmp_path / "r.mtx"
    p.write_text("%%MatrixMarket matrix coordinate integer general\n% comment\n3 2 2\n1 1 2\n3 2 1\n")
    r = read_matrix(p, "matrix-market", m_max=2)
    assert r.shape == (2, 2)  # row 2 is empty and dropped
    assert r.dropped_rows == (1,)
    full = np.zeros((3, 2), dtype=int)
    full[0, 0], full[2, 1] = 2, 1
    np.testing.assert_array_equal(r.dense(), full[[0, 2]])
    assert np.count_nonzero(full == 0) == 4


@pytest.mark.parametrize(
    "banner",
    [
        "%%MatrixMarket matrix coordinate complex general",
        "%%MatrixMarket matrix coordinate integer symmetric",
        "%%MatrixMarket tensor coordinate integer general",
        "not a banner",
    ],
)
def test_read_matrix_market_bad_header(tmp_path, banner):
    p = tmp_path / "r.mtx"
    p.write_text(banner + "\n1 1 1\n1 1 1\n")
    with pytest.raises(FormatError) as info:
        read_matrix(p, "matrix-market")
    assert info.value.line == 1


def test_read_matrix_market_real_field_must_hold_integers(tmp_path):
    p = tmp_path / "r.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n1 2 2\n1 1 2.0\n1 2 1\n")
    np.testing.assert_array_equal(read_matrix(p, "matrix-market").dense(), [[2, 1]])
    p.write_text("%%MatrixMarket matrix coordinate real general\n1 2 2\n1 1 2.5\n1 2 1\n")
    with pytest.raises(RangeError):
        read_matrix(p, "matrix-market", m_max=3)


def test_read_matrix_market_entry_count_mismatch(tmp_path):
    p = tmp_path / "r.mtx"
    p.write_text("%%MatrixMarket matrix coordinate integer general\n2 2 3\n1 1 1\n")
    with pytest.raises(FormatError) as info:
        read_matrix(p, "matrix-market")
    assert info.value.line == 2


def test_read_matrix_market_index_out_of_bounds(tmp_path):
    p = tmp_path / "r.mtx"
    p.write_text("%%MatrixMarket matrix coordinate integer general\n2 2 1\n3 1 1\n")
    with pytest.raises(FormatError) as info:
        read_matrix(p, "matrix-market")
    assert info.value.line == 3


def test_read_unknown_format(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("1\n")
    with pytest.raises(DataError):
        read_matrix(p, "parquet")


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.int64, st.tuples(st.integers(1, 7), st.integers(1, 7)), elements=st.integers(0, 5)),
    st.sampled_from(["csv", "matrix-market"]),
)
def test_write_read_round_trip(tmp_path_factory, raw, fmt):
    raw[:, 0] = np.maximum(raw[:, 0], 1)  # keep every row nonzero
    path = tmp_path_factory.mktemp("rt") / "m.txt"
    write_matrix(raw, path, fmt)
    back = read_matrix(path, fmt, m_max=5)
    np.testing.assert_array_equal(back.dense(), raw)


# value types


def test_membership_rejects_bad_row_sum():
    with pytest.raises(DataError):
        MembershipMatrix([[0.5, 0.6]])


def test_membership_rejects_out_of_range():
    with pytest.raises(DataError):
        MembershipMatrix([[1.5, -0.5]])


def test_item_params_rho_and_b():
    t = ItemParams([[1.0, 2.0], [0.5, 0.0]], m_max=4)
    assert t.rho == 2.0
    assert t.b.max() == 1.0
    with pytest.raises(DataError):
        ItemParams([[5.0]], m_max=4)


def test_real_matrix_rejects_negative_and_nan():
    with pytest.raises(DataError):
        RealMatrix([[-1.0]])
    with pytest.raises(DataError):
        RealMatrix([[np.nan]])


def test_response_matrix_direct_construction_checks():
    with pytest.raises(RangeError):
        ResponseMatrix(np.array([[5]]), 4)
    with pytest.raises(DegenerateInputError):
        ResponseMatrix(np.array([[0, 0]]), 4)


# result documents


def _result(index_set=(0, 1), pi=None):
    pi = np.array([[0.25, 0.75], [1.0, 0.0]]) if pi is None else pi
    return EstimationResult(
        pi_hat=MembershipMatrix(pi),
        theta_hat=ItemParams(np.array([[0.1, 3.3], [2.0, 1.0 / 3.0], [0.0, 4.0]]), m_max=4),
        index_set=index_set,
        singular_values=np.array([2.0 / 3.0, 0.1]),
        method="CRSC",
        tau=12.5,
        elapsed=0.125,
        subject_ids=np.array([0, 2]),
    )


def test_result_round_trip_is_lossless(tmp_path):
    res = _result()
    path = tmp_path / "res.json"
    write_result(res, path)
    back = read_result(path)
    np.testing.assert_array_equal(back.pi_hat.weights, res.pi_hat.weights)
    np.testing.assert_array_equal(back.theta_hat.theta, res.theta_hat.theta)
    np.testing.assert_array_equal(back.singular_values, res.singular_values)
    np.testing.assert_array_equal(back.subject_ids, res.subject_ids)
    assert back.index_set == res.index_set
    assert (back.method, back.tau, back.elapsed) == ("CRSC", 12.5, 0.125)


def test_result_keeps_index_order_and_schema(tmp_path):
    path = tmp_path / "res.json"
    write_result(_result(index_set=(1, 0)), path)
    doc = json.loads(path.read_text())
    assert doc["index_set"] == [1, 0]
    assert doc["schema_version"] == 1


def test_result_with_nan_is_rejected_before_writing(tmp_path):
    res = _result()
    # bypass the constructor check to mimic a corrupted in-memory result
    object.__setattr__(res.pi_hat, "weights", np.array([[np.nan, 1.0], [1.0, 0.0]]))
    path = tmp_path / "res.json"
    with pytest.raises(DataError):
        write_result(res, path)
    assert not path.exists()


def test_result_invariants():
    with pytest.raises(DataError):
        _result(index_set=(0, 0))
    with pytest.raises(DataError):
        EstimationResult(
            pi_hat=MembershipMatrix([[1.0, 0.0], [0.0, 1.0]]),
            theta_hat=ItemParams(np.ones((2, 2))),
            index_set=(0, 1),
            singular_values=np.array([1.0, 2.0]),
            method="CRSC",
            tau=None,
            elapsed=0.0,
        )


def test_read_result_rejects_other_schema(tmp_path):
    path = tmp_path / "res.json"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(FormatError):
        read_result(path)


def test_read_triplets(tmp_path):
    p = tmp_path / "u.data"
    p.write_text("1\t2\t5\t881250949\n3\t1\t3\t891717742\n1\t1\t4\t878887116\n")
    r = read_matrix(p, "triplets")
    assert r.m_max == 5
    assert r.dropped_rows == (1,)  # subject 2 rated nothing
    np.testing.assert_array_equal(r.dense(), [[4, 5], [3, 0]])


def test_read_triplets_rejects_duplicates_and_short_lines(tmp_path):
    p = tmp_path / "u.data"
    p.write_text("1 1 2\n1 1 3\n")
    with pytest.raises(FormatError):
        read_matrix(p, "triplets")
    p.write_text("1 1\n")
    with pytest.raises(FormatError) as info:
        read_matrix(p, "triplets")
    assert info.value.line == 1
