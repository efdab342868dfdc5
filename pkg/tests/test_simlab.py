from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from riskcal.simlab import (
    DEFAULT_NS,
    ClassVaryingTask,
    DistSpec,
    SimulationError,
    bound_eval_experiment,
    rcps_validity_experiment,
    sample_dist,
    sample_replicates,
)


def test_default_sample_sizes():
    assert DEFAULT_NS == (100, 316, 1000, 3162, 10000)


def test_bernoulli_lln():
    x = sample_dist(DistSpec("bernoulli", {"mu": 0.1}), 10**6, 0)
    assert abs(x.mean() - 0.1) < 0.001
    assert set(np.unique(x)) == {0.0, 1.0}


def test_beta_b_parameter():
    assert DistSpec("beta", {"a": 10, "mu": 0.01}).beta_b() == pytest.approx(990)


@pytest.mark.parametrize(
    "spec, mean",
    [
        (DistSpec("beta", {"a": 0.1, "mu": 0.1}), 0.1),
        (DistSpec("gamma", {"a": 0.05}), 1.0),
        (DistSpec("gamma", {"a": 1}), 1.0),
        (DistSpec("squared-t", {"v": 10}), 1.0),
        (DistSpec("lognormal", {"mu": -0.125, "sigma": 0.5}), 1.0),
    ],
)
def test_means_within_mc_error(spec, mean):
    assert spec.target_mean == pytest.approx(mean)
    x = sample_dist(spec, 400_000, 3)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - mean) < 5 * se


def test_lognormal_standard_pairs_have_unit_mean():
    assert DistSpec("lognormal", {"mu": -2, "sigma": 2}).target_mean == pytest.approx(1.0)


def test_family_shapes_against_scipy():
    # KS against the scaled reference laws
    n = 20_000
    g = sample_dist(DistSpec("gamma", {"a": 0.05}), n, 1)
    assert stats.kstest(g * 0.05, stats.gamma(0.05).cdf).pvalue > 1e-3
    t = sample_dist(DistSpec("squared-t", {"v": 4}), n, 2)
    assert stats.kstest(np.sqrt(t * 4 / 2), lambda s: 2 * stats.t(4).cdf(s) - 1).pvalue > 1e-3
    b = sample_dist(DistSpec("beta", {"a": 1, "mu": 0.1}), n, 3)
    assert stats.kstest(b, stats.beta(1, 9).cdf).pvalue > 1e-3


def test_gamma_small_shape_is_positive():
    x = sample_dist(DistSpec("gamma", {"a": 0.05}), 10_000, 0)
    assert np.all(x >= 0) and np.all(np.isfinite(x))


def test_seeding_per_replicate():
    spec = DistSpec("beta", {"a": 1, "mu": 0.1})
    rows = sample_replicates(spec, 50, 5, 100)
    for i in range(5):
        np.testing.assert_array_equal(rows[i], sample_dist(spec, 50, 100 + i))
    np.testing.assert_array_equal(sample_replicates(spec, 50, 3, 100, start=2), rows[2:])


@pytest.mark.parametrize(
    "family, params",
    [
        ("squared-t", {"v": 2}),
        ("beta", {"a": -1, "mu": 0.1}),
        ("bernoulli", {"mu": 1.5}),
        ("bernoulli", {"p": 0.1}),
        ("poisson", {"mu": 1}),
    ],
)
def test_bad_specs(family, params):
    with pytest.raises(SimulationError):
        DistSpec(family, params)


def test_mismatch_errors():
    with pytest.raises(SimulationError):
        bound_eval_experiment(DistSpec("gamma", {"a": 1}), 100, 0.1, ["simple-hoeffding"], 10, 0)
    with pytest.raises(SimulationError):
        bound_eval_experiment(DistSpec("beta", {"a": 1, "mu": 0.1}), 100, 0.1, ["binomial-exact"], 10, 0)
    with pytest.raises(SimulationError):
        bound_eval_experiment(DistSpec("bernoulli", {"mu": 0.1}), 100, 0.1, ["wsr"], 0, 0)


def test_deterministic_and_chunk_independent(monkeypatch):
    spec = DistSpec("beta", {"a": 1, "mu": 0.1})
    kinds = ["hoeffding-bentkus", "wsr", "empirical-bernstein"]
    a = bound_eval_experiment(spec, 200, 0.1, kinds, 120, 9)
    b = bound_eval_experiment(spec, 200, 0.1, kinds, 120, 9)
    assert a == b
    import riskcal.simlab as sl

    monkeypatch.setattr(sl, "CHUNK_ELEMENTS", 200 * 7)
    assert bound_eval_experiment(spec, 200, 0.1, kinds, 120, 9) == a


def test_hb_coverage_bernoulli():
    r = bound_eval_experiment(DistSpec("bernoulli", {"mu": 0.1}), 1000, 0.1, ["hoeffding-bentkus"], 4000, 0)[0]
    assert r.coverage >= 0.9 - 3 * math.sqrt(0.09 / 4000)
    assert r.median_gap > 0


def test_degenerate_confidence():
    # delta close to 1: bounds collapse toward the sample mean, so coverage is
    # roughly the chance the sample mean overshoots
    r = bound_eval_experiment(DistSpec("beta", {"a": 1, "mu": 0.5}), 100, 0.999, ["simple-hoeffding"], 200, 0)[0]
    assert 0.3 < r.coverage < 0.75


def test_wsr_tighter_than_hoeffding_on_beta():
    rs = bound_eval_experiment(DistSpec("beta", {"a": 1, "mu": 0.1}), 1000, 0.1, ["wsr", "simple-hoeffding"], 300, 0)
    assert rs[0].median_gap < rs[1].median_gap


def test_relative_gap_wsr_at_ten_thousand():
    r = bound_eval_experiment(DistSpec("bernoulli", {"mu": 0.1}), 10_000, 0.1, ["wsr"], 100, 0)[0]
    assert r.mean_relative_gap < 0.10


def test_result_row_layout():
    r = bound_eval_experiment(DistSpec("bernoulli", {"mu": 0.1}), 50, 0.1, ["clt"], 1, 4)[0]
    assert len(r.row()) == len(r.CSV_COLUMNS)
    assert r.row()[:2] == ["bernoulli", "mu=0.1"]


# end-to-end calibration


def test_task_risk_matches_monte_carlo():
    task = ClassVaryingTask(grid_size=11, seed=1)
    m = task.sample(200_000, np.random.default_rng(0))
    emp = m.losses.mean(axis=0)
    exact = task.risk(task.grid)
    se = m.losses.std(axis=0) / math.sqrt(m.n) + 1e-12
    assert np.all(np.abs(emp - exact) < 5 * se)
    assert exact[-1] == 0.0
    assert np.all(np.diff(exact) <= 1e-15)


def test_rcps_validity_small():
    task = ClassVaryingTask()
    r = rcps_validity_experiment(task, "wsr", 0.1, 0.1, 100, 0, n=1000)
    assert r.violation_rate <= 0.1 + 3 * math.sqrt(0.09 / 100)
    assert r.max_risk_when_valid(0.1) <= 0.1


def test_rcps_loose_alpha_picks_grid_min():
    task = ClassVaryingTask(grid_size=21)
    r = rcps_validity_experiment(task, "hoeffding-bentkus", 0.99, 0.1, 20, 0, n=500)
    assert np.all(r.lambda_hats == task.grid[0])
    assert r.violations == 0


def test_rcps_delta_monotone_on_matched_seeds():
    task = ClassVaryingTask(grid_size=51)
    loose = rcps_validity_experiment(task, "hoeffding-bentkus", 0.1, 0.5, 60, 0, n=500)
    tight = rcps_validity_experiment(task, "hoeffding-bentkus", 0.1, 0.01, 60, 0, n=500)
    assert loose.violation_rate >= tight.violation_rate
    assert np.all(loose.lambda_hats <= tight.lambda_hats)


def test_rcps_deterministic():
    task = ClassVaryingTask(grid_size=21)
    a = rcps_validity_experiment(task, "wsr", 0.2, 0.1, 5, 3, n=300)
    b = rcps_validity_experiment(task, "wsr", 0.2, 0.1, 5, 3, n=300)
    np.testing.assert_array_equal(a.lambda_hats, b.lambda_hats)
