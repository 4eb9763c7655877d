import numpy as np
import pytest
from scipy import stats

from gomspectral.errors import DataError, DegenerateInputError
from gomspectral.simulation import (
    SUMMARY_COLUMNS,
    TABLE_COLUMNS,
    ExperimentConfig,
    make_rng,
    run_experiment,
    sample_gom,
    sample_memberships,
    sample_responses,
    summarize,
    write_summary,
    write_table,
)


def test_instance_invariants():
    inst = sample_gom(800, 200, 3, 4, 1.0, seed=0)
    pi = inst.pi.weights
    # 200 pure subjects per class lead, in class order
    np.testing.assert_array_equal(np.argmax(pi[:600], axis=1), np.repeat([0, 1, 2], 200))
    assert np.all(pi[:600].max(axis=1) == 1.0)
    assert inst.pure_rows == (0, 200, 400)
    # mixed rows follow (r1, r2, 1 - r1 - r2) with r ~ U(0, 1/2)
    mixed = pi[600:]
    assert mixed[:, :2].max() <= 0.5 and mixed.min() >= 0
    s = np.linalg.svd(inst.theta.theta, compute_uv=False)
    assert s[-1] > 1e-10 * s[0]
    assert inst.theta.rho == pytest.approx(1.0)
    pop = inst.population().values
    assert pop.min() >= 0 and pop.max() <= 4
    assert inst.r.min() >= 0 and inst.r.max() <= 4


def test_every_class_has_a_pure_row():
    for k in (2, 3, 4, 5):
        pi, pure = sample_memberships(100, k, make_rng(k))
        for c in range(k):
            assert np.any(pi[:, c] == 1.0)
            assert pi[pure[c], c] == 1.0


def test_pure_count_defaults():
    pi, _ = sample_memberships(20, 2, make_rng(0))
    assert np.count_nonzero(pi.max(axis=1) == 1.0) >= 10  # five pure rows per class
    pi, _ = sample_memberships(400, 5, make_rng(0))
    assert np.count_nonzero(pi.max(axis=1) == 1.0) == 5 * 66


def test_dirichlet_mixing_option():
    pi, _ = sample_memberships(60, 3, make_rng(1), mixing="dirichlet")
    np.testing.assert_allclose(pi.sum(axis=1), 1.0)
    with pytest.raises(DataError):
        sample_memberships(60, 3, make_rng(1), mixing="beta")


def test_rho_bounds():
    with pytest.raises(DataError):
        sample_gom(40, 10, 2, 4, 5.0, seed=0)
    with pytest.raises(DataError):
        sample_gom(40, 10, 2, 4, 0.0, seed=0)


def test_vanishing_rho_triggers_cleanup():
    inst = sample_gom(40, 10, 2, 4, 1e-9, seed=0)
    assert not inst.r.any()
    with pytest.raises(DegenerateInputError):
        inst.responses()


def test_cleanup_keeps_truth_aligned():
    inst = sample_gom(200, 10, 2, 4, 0.1, seed=3)
    resp = inst.responses()
    assert resp.dropped_rows  # sparse enough that some subjects answer nothing
    truth = inst.truth_for(resp)
    assert truth.shape[0] == resp.shape[0]
    np.testing.assert_array_equal(truth.weights, inst.pi.weights[resp.row_ids])


def test_same_seed_same_instance():
    a = sample_gom(100, 20, 3, 4, 1.0, seed=42)
    b = sample_gom(100, 20, 3, 4, 1.0, seed=42)
    np.testing.assert_array_equal(a.r, b.r)
    np.testing.assert_array_equal(a.theta.theta, b.theta.theta)
    c = sample_gom(100, 20, 3, 4, 1.0, seed=43)
    assert not np.array_equal(a.r, c.r)


def test_monte_carlo_mean_within_three_standard_errors():
    inst = sample_gom(800, 200, 3, 4, 1.0, seed=0)
    probe = inst.population().values[590:600, :10]  # straddles pure and mixed rows
    reps = 200
    rng = make_rng(1)
    total = np.zeros_like(probe)
    for _ in range(reps):
        total += sample_responses(probe, 4, rng)
    mean = total / reps
    p = probe / 4
    se = np.sqrt(4 * p * (1 - p) / reps)
    assert np.all(np.abs(mean - probe) <= 3 * se + 1e-12)


def test_binomial_histogram_chi_square():
    m, mean = 4, 1.3
    draws = sample_responses(np.full(100_000, mean), m, make_rng(5))
    observed = np.bincount(draws, minlength=m + 1)
    expected = stats.binom.pmf(np.arange(m + 1), m, mean / m) * draws.size
    _, pvalue = stats.chisquare(observed, expected)
    assert pvalue > 0.01


def test_experiment_configs():
    e1 = ExperimentConfig.standard(1)
    assert e1.grid[0] == 0.2 and e1.grid[-1] == 7.0 and len(e1.grid) == 35
    assert e1.cell(0.5)[3] == 0.5 * 4 * 800
    e2 = ExperimentConfig.standard(2)
    assert e2.grid == tuple(round(0.2 * i, 10) for i in range(1, 16))
    assert len(e2.grid) * e2.reps * len(e2.methods) == 6000
    e3 = ExperimentConfig.standard(3)
    assert e3.cell(8000)[:2] == (8000, 2000)
    assert e3.rho == 0.2
    e4 = ExperimentConfig.standard(4)
    assert (e4.n, e4.j, e4.k, e4.m) == (20, 10, 2, 5)
    assert e4.estimate_k
    with pytest.raises(DataError):
        ExperimentConfig.standard(9)
    with pytest.raises(DataError):
        ExperimentConfig.standard(2, reps=0)
    with pytest.raises(DataError):
        ExperimentConfig.standard(2, grid=())


def test_single_row_experiment():
    cfg = ExperimentConfig.standard(2, reps=1, grid=(1.0,), methods=("SRSC",))
    rows = run_experiment(cfg)
    assert len(rows) == 1
    assert rows[0].method == "SRSC" and rows[0].grid_value == 1.0 and not rows[0].error


def test_experiment_is_reproducible(tmp_path):
    cfg = ExperimentConfig.standard(4, reps=2, seed=7, methods=("SSC", "SRM"), k_range=(1, 4))
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    write_table(a, tmp_path / "a.csv", timing=False)
    write_table(b, tmp_path / "b.csv", timing=False)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0].split(",")
    assert header == [c for c in TABLE_COLUMNS if c != "runtime_s"]
    assert all(r.k_hat is not None for r in a)


def test_cells_do_not_depend_on_each_other():
    full = run_experiment(ExperimentConfig.standard(2, reps=3, grid=(0.6, 1.2), methods=("SSC",)))
    # the same (grid index, rep) cell draws the same instance whatever the grid value list
    alone = run_experiment(ExperimentConfig.standard(2, reps=3, grid=(0.6,), methods=("SSC",)))
    assert [r.hamming for r in alone] == [r.hamming for r in full[:3]]


def test_failed_fit_is_recorded_not_raised():
    cfg = ExperimentConfig.standard(4, reps=1, k=11, methods=("SRSC",), estimate_k=False)
    rows = run_experiment(cfg)
    assert len(rows) == 1 and rows[0].error
    assert np.isnan(rows[0].hamming)


def test_summary(tmp_path):
    rows = run_experiment(ExperimentConfig.standard(4, reps=3, methods=("SSC",), k_range=(1, 3)))
    summary = summarize(rows, k_true=2)
    assert len(summary) == 1
    rec = summary[0]
    assert rec["reps"] == 3 and rec["failures"] == 0
    assert rec["mean_hamming"] == pytest.approx(np.mean([r.hamming for r in rows]))
    assert 0 <= rec["k_accuracy"] <= 1
    write_summary(summary, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0].split(",") == list(SUMMARY_COLUMNS)
