import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from pytest import approx
from pytest import mark

from hypothesis            import given
from hypothesis.strategies import floats

from covariance_core import covariance_dsim, sbm_cov, sbm_seasonal
from errors import DegenerateInputError, DomainError, NumericalError
from estimators import (MleConfig, estimate_r0, estimate_r1, estimate_r_n_tau, estimate_seasonal,
                        estimation_report, gaussian_loglik, geometric_subsample, hurst_mle,
                        hurst_variation, normalized_mean, variation_sums)
from process_sim import Drift, SbmModel, simulate_sbm
from scale_grid import EquispacedScaleGrid, SampledPath, ScaleGrid

from .strategies import exact_dsi_path, self_similar_path

ALPHA, T, H = 1.05, 6, 0.8


@pytest.fixture(scope='module')
def sbm_paths():
    """40 paths of the covariance verification setup (drift none, M = 500)."""
    model = SbmModel(H, ALPHA ** T)
    grid = ScaleGrid(ALPHA, T, 500)
    return [simulate_sbm(model, grid, seed=100 + i) for i in range(40)]


@pytest.fixture(scope='module')
def drifted_path():
    model = SbmModel(0.8, 1.2, Drift.RANDOM)
    return simulate_sbm(model, EquispacedScaleGrid(1.2, 200, 30), seed=8)


# =============================================================================
# Moment estimators
# =============================================================================

def test_mean_of_exact_dsi_path_is_the_level():
    path = exact_dsi_path(0.7, 1.1, 3, 20, levels=[2.0, -1.0, 0.5])
    for j, level in enumerate([2.0, -1.0, 0.5]):
        assert normalized_mean(path, 0.7, j) == approx(level, rel=1e-12)
        assert abs(estimate_r0(path, 0.7, j)) < 1e-20
        assert abs(estimate_r1(path, 0.7, j)) < 1e-20


def test_mean_of_zero_path():
    path = SampledPath(ScaleGrid(1.1, 3, 5), np.zeros(16))
    assert normalized_mean(path, 0.5, 1) == 0.0


def test_season_index_range():
    path = exact_dsi_path(0.7, 1.1, 3, 5)
    with pytest.raises(DomainError):
        normalized_mean(path, 0.7, 3)
    with pytest.raises(DomainError):
        estimate_r0(path, 0.7, -1)


def test_moment_estimators_need_geometric_grid(drifted_path):
    with pytest.raises(DomainError):
        estimate_r0(drifted_path, 0.8, 0)


def test_variance_is_quadratic_in_scale(sbm_paths):
    path = sbm_paths[0]
    assert estimate_r0(path.scaled(3.0), H, 2) == approx(9.0 * estimate_r0(path, H, 2), rel=1e-10)


def test_exact_dsi_path_is_rejected_as_degenerate():
    with pytest.raises(DegenerateInputError):
        estimate_seasonal(exact_dsi_path(0.8, ALPHA, T, 20), 0.8)


def test_mean_is_near_zero_without_drift(sbm_paths):
    # renormalized samples are AR(1) across scales with rho = alpha^-3, so the standard
    # error is sqrt(r0[0] (1 + rho) / ((1 - rho) M)) ~ 0.18 rather than sqrt(r0[0]/M)
    assert abs(normalized_mean(sbm_paths[0], H, 0)) < 0.75


def test_seasonal_estimates_track_the_analytic_table(sbm_paths):
    table = sbm_seasonal(H, ALPHA, T)
    r0 = np.mean([estimate_r0(p, H, 0) for p in sbm_paths])
    r1_first = np.mean([estimate_r1(p, H, 0) for p in sbm_paths])
    r1_last = np.mean([estimate_r1(p, H, T - 1) for p in sbm_paths])
    assert r0 == approx(table.r0[0], rel=0.15)
    assert r1_first == approx(table.r1[0], rel=0.15)
    assert r1_last == approx(ALPHA ** 10.4, rel=0.15)


def test_seasonal_table_average(sbm_paths):
    table = sbm_seasonal(H, ALPHA, T)
    estimates = [estimate_seasonal(p, H) for p in sbm_paths]
    assert np.mean([e.r0 for e in estimates], axis=0) == approx(table.r0, rel=0.15)
    assert np.mean([e.r1 for e in estimates], axis=0) == approx(table.r1, rel=0.15)


def test_general_lag_estimate_tracks_oracle(sbm_paths):
    oracle = sbm_cov(SbmModel(H, ALPHA ** T), ALPHA ** 29, ALPHA ** 9)
    estimate = np.mean([estimate_r_n_tau(p, H, 9, 20) for p in sbm_paths])
    assert estimate == approx(oracle, rel=0.2)


def test_direct_and_rebuilt_lags_agree_over_twenty_seeds(sbm_paths):
    oracle = sbm_cov(SbmModel(H, ALPHA ** T), ALPHA ** 29, ALPHA ** 9)
    gaps = [abs(estimate_r_n_tau(p, H, 9, 20) - covariance_dsim(estimate_seasonal(p, H), 9, 20)) / oracle
            for p in sbm_paths[:20]]
    assert np.median(gaps) < 0.10


def test_zero_lag_matches_variance_estimate(sbm_paths):
    path = sbm_paths[1]
    for j in range(T):
        assert estimate_r_n_tau(path, H, j, 0) == approx(estimate_r0(path, H, j), rel=1e-12)


def test_negative_lag_uses_symmetry(sbm_paths):
    path = sbm_paths[2]
    assert estimate_r_n_tau(path, H, 10, -4) == estimate_r_n_tau(path, H, 6, 4)


def test_general_lag_needs_enough_intervals():
    path = exact_dsi_path(0.5, 1.1, 3, 5)
    with pytest.raises(DegenerateInputError):
        estimate_r_n_tau(path, 0.5, 1, 11)
    with pytest.raises(DomainError):
        estimate_r_n_tau(path, 0.5, 1, -2)


def test_estimation_report_fields(sbm_paths):
    report = estimation_report(sbm_paths[3], H)
    assert set(report) == {'H_used', 'r0', 'r1', 'admissible', 'margins'}
    assert len(report['r0']) == T and len(report['margins']) == T


# =============================================================================
# Variation-ratio Hurst estimator
# =============================================================================

def test_constant_path_has_no_variation():
    path = SampledPath(EquispacedScaleGrid(1.2, 5, 3), np.full(15, 4.0))
    ss1, ss2 = variation_sums(path)
    assert ss1.tolist() == [0.0] * 3 and ss2.tolist() == [0.0] * 3
    with pytest.raises(DegenerateInputError, match="interval 0"):
        hurst_variation(path)


def test_linear_trend_has_no_second_variation():
    k = np.arange(6.0)
    values = np.concatenate([k + 5 * i for i in range(3)])
    ss1, ss2 = variation_sums(SampledPath(EquispacedScaleGrid(1.2, 6, 3), values))
    assert ss1 == approx([1.0, 1.0, 1.0])
    assert ss2.tolist() == [0.0, 0.0, 0.0]


def test_variation_needs_three_points_per_interval():
    with pytest.raises(DomainError):
        variation_sums(SampledPath(EquispacedScaleGrid(1.2, 2, 3), np.arange(6.0)))


def test_variation_needs_equispaced_grid():
    with pytest.raises(DomainError):
        variation_sums(exact_dsi_path(0.5, 1.1, 3, 4))


@given(H=floats(0.01, 1.99))
def test_self_similar_path_gives_exact_index(H):
    estimate = hurst_variation(self_similar_path(H, 1.3, 12, 8))
    assert estimate.mu1 == approx(np.full(7, H), rel=1e-9)
    assert estimate.h1 == approx(H, rel=1e-9)
    assert estimate.h2 == approx(H, rel=1e-9)
    assert len(estimate.ss1) == 8 and len(estimate.mu2) == 7


def test_half_index_example():
    estimate = hurst_variation(self_similar_path(0.5, 1.2, 10, 6))
    assert estimate.h1 == approx(0.5, rel=1e-12)
    assert estimate.h2 == approx(0.5, rel=1e-12)


@mark.parametrize("factor", [0.01, 3.0, 250.0])
def test_scaling_leaves_index_unchanged(drifted_path, factor):
    base = hurst_variation(drifted_path)
    scaled = hurst_variation(drifted_path.scaled(factor))
    assert scaled.mu1 == approx(base.mu1, rel=1e-9)
    assert scaled.h2 == approx(base.h2, rel=1e-9)


def test_shift_leaves_variation_unchanged(drifted_path):
    ss1, ss2 = variation_sums(drifted_path)
    shifted1, shifted2 = variation_sums(drifted_path.shifted(-17.0))
    assert shifted1 == approx(ss1, rel=1e-8)
    assert shifted2 == approx(ss2, rel=1e-8)


def test_variation_recovers_index_of_drifted_motion(drifted_path):
    estimate = hurst_variation(drifted_path)
    assert abs(estimate.h1 - 0.8) < 0.1
    assert abs(estimate.h2 - 0.8) < 0.1
    assert set(estimate.to_dict()) == {'h1', 'h2', 'mu1', 'mu2'}


# =============================================================================
# Gaussian maximum likelihood
# =============================================================================

def test_loglik_matches_scipy():
    cov = np.array([[2.0, 0.5, 0.1], [0.5, 1.0, 0.2], [0.1, 0.2, 1.5]])
    x = np.array([0.3, -1.2, 0.7])
    assert gaussian_loglik(x, cov) == approx(multivariate_normal(np.zeros(3), cov).logpdf(x), rel=1e-12)


def test_loglik_fails_on_indefinite_covariance():
    with pytest.raises(NumericalError):
        gaussian_loglik(np.ones(2), np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_loglik_jitter_rescues_singular_covariance():
    cov = np.ones((3, 3))
    assert math.isfinite(gaussian_loglik(np.ones(3), cov))


def test_subsample_is_sorted_unique_and_capped(drifted_path):
    idx = geometric_subsample(drifted_path)
    assert np.all(np.diff(idx) > 0)
    assert idx.size <= 300
    assert geometric_subsample(drifted_path, cap=10).size <= 10


@mark.parametrize("kwargs", [dict(h_range=(0.9, 0.5)), dict(h_range=(0.0, 0.5)),
                             dict(cap=5), dict(family='fbm')])
def test_mle_config_validation(kwargs):
    with pytest.raises(DomainError):
        MleConfig(**kwargs)


def test_mle_singleton_interval():
    model = SbmModel(0.5, 1.2, Drift.RANDOM)
    path = simulate_sbm(model, EquispacedScaleGrid(1.2, 20, 10), seed=4)
    assert hurst_mle(path, MleConfig(h_range=(0.5, 0.5))).h == 0.5


def test_mle_recovers_half():
    model = SbmModel(0.5, 1.2, Drift.RANDOM)
    path = simulate_sbm(model, EquispacedScaleGrid(1.2, 200, 30), seed=12)
    estimate = hurst_mle(path)
    assert abs(estimate.h - 0.5) < 0.1
    assert len(estimate.profile_h) == 25
    assert estimate.n_points > 100


@mark.slow
def test_likelihood_peaks_near_true_index():
    model = SbmModel(0.5, 1.2, Drift.RANDOM)
    grid = EquispacedScaleGrid(1.2, 200, 30)
    config = MleConfig(h_range=(0.2, 0.8), profile_points=3)
    profiles = np.array([hurst_mle(simulate_sbm(model, grid, seed=s), config).profile_loglik
                         for s in range(20)])
    mean = profiles.mean(axis=0)
    assert mean[1] > mean[0] and mean[1] > mean[2]


@mark.slow
@mark.parametrize("H_true", [0.3, 0.5, 0.8])
def test_likelihood_estimate_is_median_unbiased(H_true):
    model = SbmModel(H_true, 1.2, Drift.RANDOM)
    grid = EquispacedScaleGrid(1.2, 200, 30)
    estimates = [hurst_mle(simulate_sbm(model, grid, seed=500, replicate=r)).h for r in range(30)]
    assert abs(np.median(estimates) - H_true) < 0.05
