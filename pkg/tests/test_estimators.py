import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gomspectral.data import MembershipMatrix, RealMatrix, validate_response_matrix
from gomspectral.errors import DataError, IllConditionedError
from gomspectral.estimators import (
    FITTERS,
    FitConfig,
    fit,
    fit_gom_crsc,
    fit_gom_srm,
    fit_gom_srsc,
    fit_gom_ssc,
    item_params,
    memberships_from_weights,
)
from gomspectral.metrics import hamming_error, relative_error
from gomspectral.simulation import sample_gom

METHODS = sorted(FITTERS)


def row_max_error(pi_hat, pi_true):
    """Max per-row 1-norm error, minimized over column permutations."""
    perm = list(hamming_error(pi_hat, pi_true).permutation)
    return np.abs(pi_hat.weights - pi_true.weights[:, perm]).sum(axis=1).max()


# memberships_from_weights


def test_weights_normalized():
    pi, bad = memberships_from_weights([[2.0, 2.0]])
    np.testing.assert_array_equal(pi.weights, [[0.5, 0.5]])
    assert bad == ()


def test_weights_clip_then_normalize():
    pi, _ = memberships_from_weights([[-1.0, 3.0]])
    np.testing.assert_array_equal(pi.weights, [[0.0, 1.0]])


def test_weights_degenerate_row_becomes_uniform():
    pi, bad = memberships_from_weights([[0.0, 0.0], [1.0, 0.0]])
    np.testing.assert_array_equal(pi.weights, [[0.5, 0.5], [1.0, 0.0]])
    assert bad == (0,)


def test_weights_reject_non_finite():
    with pytest.raises(DataError):
        memberships_from_weights([[np.inf, 1.0]])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100.0))
def test_weights_column_scale_cancels(seed, c):
    z = np.random.default_rng(seed).standard_normal((12, 3))
    a, _ = memberships_from_weights(z)
    b, _ = memberships_from_weights(c * z)
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-12)


# item_params


def test_item_params_identity_memberships():
    r = np.array([[1.0, 5.0, 0.0], [2.0, 0.0, 3.0]])
    theta = item_params(RealMatrix(r, m_max=4), MembershipMatrix(np.eye(2)), m_max=4)
    np.testing.assert_allclose(theta.theta, np.clip(r.T, 0, 4))


def test_item_params_noiseless_identity():
    inst = sample_gom(60, 15, 3, 4, 1.5, seed=2)
    theta = item_params(inst.population(), inst.pi)
    np.testing.assert_allclose(theta.theta, inst.theta.theta, atol=1e-8)


def test_item_params_duplicate_columns():
    pi = MembershipMatrix(np.full((5, 2), 0.5))
    with pytest.raises(IllConditionedError) as info:
        item_params(RealMatrix(np.ones((5, 3))), pi)
    assert info.value.stage == "item-parameters"


# exact recovery on the population matrix


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("k", [2, 3, 4])
def test_exact_recovery(method, k):
    inst = sample_gom(200, 60, k, 4, 1.0, seed=10 + k)
    res = fit(inst.population(), method, FitConfig(k))
    assert row_max_error(res.pi_hat, inst.pi) <= 1e-8
    assert relative_error(res.theta_hat, inst.theta).value <= 1e-8
    assert all(inst.pi.weights[i].max() == 1.0 for i in res.index_set)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 4), st.sampled_from(METHODS))
def test_exact_recovery_property(seed, k, method):
    inst = sample_gom(80, 30, k, 4, 1.0, seed=seed, mixing="dirichlet")
    res = fit(inst.population(), method, FitConfig(k))
    assert row_max_error(res.pi_hat, inst.pi) <= 1e-8
    assert relative_error(res.theta_hat, inst.theta).value <= 1e-8


# single class and toy shapes


@pytest.mark.parametrize("method", METHODS)
def test_single_class(method):
    inst = sample_gom(40, 10, 3, 4, 2.0, seed=1)
    res = fit(inst.responses(), method, FitConfig(1))
    np.testing.assert_array_equal(res.pi_hat.weights, np.ones((res.pi_hat.shape[0], 1)))


def test_srm_square_identity():
    r = validate_response_matrix(3 * np.eye(3, dtype=int), 3)
    res = fit_gom_srm(r, FitConfig(3))
    perm = list(hamming_error(res.pi_hat, MembershipMatrix(np.eye(3))).permutation)
    np.testing.assert_allclose(res.pi_hat.weights, np.eye(3)[:, perm], atol=1e-12)


# output contracts on noisy data


@pytest.mark.parametrize("method", METHODS)
def test_output_contracts(method):
    inst = sample_gom(300, 75, 3, 4, 1.0, seed=5)
    r = inst.responses()
    res = fit(r, method, FitConfig(3))
    w = res.pi_hat.weights
    assert np.all(w >= 0)
    assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12
    t = res.theta_hat.theta
    assert t.min() >= 0 and t.max() <= 4
    assert len(set(res.index_set)) == 3
    assert res.method == method
    assert np.all(np.diff(res.singular_values) <= 0)
    np.testing.assert_array_equal(res.subject_ids, r.row_ids)
    if method in ("SRSC", "CRSC"):
        assert res.tau == 4 * 300
    else:
        assert res.tau is None


@pytest.mark.parametrize("method", METHODS)
def test_subject_permutation_equivariance(method):
    inst = sample_gom(200, 50, 3, 4, 2.0, seed=7)
    r = inst.responses().dense()
    perm = np.random.default_rng(0).permutation(r.shape[0])
    a = fit(validate_response_matrix(r, 4), method, FitConfig(3))
    b = fit(validate_response_matrix(r[perm], 4), method, FitConfig(3))
    cols = list(hamming_error(b.pi_hat, MembershipMatrix(a.pi_hat.weights[perm])).permutation)
    np.testing.assert_allclose(b.pi_hat.weights, a.pi_hat.weights[perm][:, cols], atol=1e-8)
    np.testing.assert_allclose(b.theta_hat.theta, a.theta_hat.theta[:, cols], atol=1e-8)


def test_srsc_and_crsc_beat_chance_on_noisy_data():
    inst = sample_gom(800, 200, 3, 4, 2.0, seed=12)
    r = inst.responses()
    truth = inst.truth_for(r)
    for fitter in (fit_gom_srsc, fit_gom_crsc, fit_gom_ssc):
        assert hamming_error(fitter(r, FitConfig(3)).pi_hat, truth).value < 0.4


def test_explicit_tau_is_used():
    inst = sample_gom(100, 25, 2, 4, 2.0, seed=3)
    res = fit(inst.responses(), "srsc", FitConfig(2, tau=7.5))
    assert res.tau == 7.5


def test_fit_dispatch_errors():
    inst = sample_gom(40, 10, 2, 4, 2.0, seed=0)
    with pytest.raises(DataError):
        fit(inst.responses(), "xyz", FitConfig(2))
    with pytest.raises(DataError):
        fit(inst.responses(), "SRSC", FitConfig(11))


def test_fit_config_validation():
    with pytest.raises(DataError):
        FitConfig(0)
    with pytest.raises(DataError):
        FitConfig(2, tau=-1.0)
    with pytest.raises(DataError):
        FitConfig(2, margin_slack=-0.1)
    with pytest.raises(DataError):
        FitConfig(2, cone_representative="median")


def test_fitters_are_deterministic():
    inst = sample_gom(200, 50, 3, 4, 1.0, seed=21)
    r = inst.responses()
    for fitter in (fit_gom_srsc, fit_gom_crsc, fit_gom_ssc, fit_gom_srm):
        a, b = fitter(r, FitConfig(3)), fitter(r, FitConfig(3))
        np.testing.assert_array_equal(a.pi_hat.weights, b.pi_hat.weights)
        assert a.index_set == b.index_set
