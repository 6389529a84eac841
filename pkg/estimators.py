"""
Estimators Module
Moment estimators for the seasonal covariance table and general lags,
the variation-ratio Hurst estimator, and a Gaussian maximum-likelihood
Hurst estimator used as the benchmark baseline.

The moment estimators take H as given: lambda^(-kH) X(alpha^(kT+j)) is
distributed like X(alpha^j), so each season j yields M replicates.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize_scalar

from config import ESTIMATOR_CONFIG, MLE_CONFIG
from covariance_core import SeasonalCovariance, admissible, sbm_cov_matrix
from errors import DegenerateInputError, DomainError, NumericalError
from process_sim import Drift, SbmModel
from scale_grid import EquispacedScaleGrid, SampledPath, ScaleGrid

logger = logging.getLogger(__name__)


# =============================================================================
# MOMENT ESTIMATORS (GEOMETRIC GRID)
# =============================================================================

def _geometric(path: SampledPath) -> ScaleGrid:
    if not isinstance(path.grid, ScaleGrid):
        raise DomainError("moment estimators need a path on a geometric ScaleGrid")
    return path.grid


def _check_season(j: int, T: int):
    if not 0 <= j < T:
        raise DomainError(f"season index j must be in 0 ... {T - 1}, got {j}")


def _check_replicates(M: int):
    if M < 2:
        raise DomainError(f"need at least 2 scale intervals, got M={M}")


def _renormalize(grid: ScaleGrid, H: float, count: int) -> np.ndarray:
    """lambda^(-kH) for k = 0 ... count-1."""
    return np.exp(-np.arange(count) * H * grid.T * math.log(grid.alpha))


def _season(path: SampledPath, H: float, offset: int, count: int) -> np.ndarray:
    """lambda^(-kH) X(alpha^(kT + offset)) for k = 0 ... count-1."""
    grid = path.grid
    return _renormalize(grid, H, count) * path.values[np.arange(count) * grid.T + offset]


def normalized_mean(path: SampledPath, H: float, j: int) -> float:
    """m_j = (1/M) sum_k lambda^(-kH) X(alpha^(kT+j))."""
    grid = _geometric(path)
    _check_season(j, grid.T)
    return float(np.mean(_season(path, H, j, grid.M)))


def estimate_r0(path: SampledPath, H: float, j: int) -> float:
    """Sample variance of the renormalized season-j values (divisor M-1)."""
    grid = _geometric(path)
    _check_season(j, grid.T)
    _check_replicates(grid.M)
    centered = _season(path, H, j, grid.M) - normalized_mean(path, H, j)
    return float(centered @ centered / (grid.M - 1))


def estimate_r1(path: SampledPath, H: float, j: int) -> float:
    """
    Sample covariance of seasons j and j+1.

    For j = T-1 the partner is X(alpha^(kT+T)), centered at lambda^H m_0.
    """
    grid = _geometric(path)
    _check_season(j, grid.T)
    _check_replicates(grid.M)
    first = _season(path, H, j, grid.M) - normalized_mean(path, H, j)
    if j < grid.T - 1:
        second = _season(path, H, j + 1, grid.M) - normalized_mean(path, H, j + 1)
    else:
        second = (_season(path, H, grid.T, grid.M)
                  - math.exp(H * grid.T * math.log(grid.alpha)) * normalized_mean(path, H, 0))
    return float(first @ second / (grid.M - 1))


def estimate_r_n_tau(path: SampledPath, H: float, n: int, tau: int) -> float:
    """
    Estimate R_n(tau) with n = rT + i and n + tau = sT + j.

    Sums k = 0 ... M-s-1 and divides by M-s-1. Negative lags use
    R_n(tau) = R_(n+tau)(-tau).
    """
    grid = _geometric(path)
    if n < 0 or n + tau < 0:
        raise DomainError(f"need n >= 0 and n + tau >= 0, got n={n}, tau={tau}")
    if tau < 0:
        return estimate_r_n_tau(path, H, n + tau, -tau)
    r, i = divmod(n, grid.T)
    s, j = divmod(n + tau, grid.T)
    if s > grid.M - 2:
        raise DegenerateInputError(
            f"insufficient data: n + tau = {n + tau} needs more than M = {grid.M} scale intervals")
    count = grid.M - s
    log_lam = grid.T * math.log(grid.alpha)
    first = _season(path, H, n, count) - math.exp(r * H * log_lam) * normalized_mean(path, H, i)
    second = _season(path, H, n + tau, count) - math.exp(s * H * log_lam) * normalized_mean(path, H, j)
    return float(first @ second / (count - 1))


def estimate_seasonal(path: SampledPath, H: float) -> SeasonalCovariance:
    """Estimate {R_j(0), R_j(1)}; zero variances are rejected, inadmissible tables warned about."""
    grid = _geometric(path)
    rtol = ESTIMATOR_CONFIG['degenerate_rtol']
    r0, r1 = [], []
    for j in range(grid.T):
        season = _season(path, H, j, grid.M)
        variance = estimate_r0(path, H, j)
        floor = (rtol * math.sqrt(float(np.mean(season ** 2)))) ** 2
        if variance <= floor:
            raise DegenerateInputError(f"zero variance in season j = {j}; path is deterministic")
        r0.append(variance)
        r1.append(estimate_r1(path, H, j))
    table = SeasonalCovariance(H, grid.alpha, grid.T, r0, r1)
    report = admissible(table)
    if not report.ok:
        warnings.warn(f"estimated covariance table is not admissible at j = {report.violations}",
                      stacklevel=2)
    return table


def estimation_report(path: SampledPath, H: float) -> Dict:
    """`{H_used, r0, r1, admissible, margins}` for the CLI."""
    table = estimate_seasonal(path, H)
    report = admissible(table)
    return {'H_used': H, 'r0': table.r0.tolist(), 'r1': table.r1.tolist(),
            'admissible': report.ok, 'margins': report.margins}


# =============================================================================
# VARIATION-RATIO HURST ESTIMATOR (EQUISPACED GRID)
# =============================================================================

@dataclass
class HurstEstimate:
    """First- and second-order variation estimates with their per-interval pieces."""
    h1: float
    h2: float
    mu1: np.ndarray
    mu2: np.ndarray
    ss1: np.ndarray
    ss2: np.ndarray

    def to_dict(self) -> Dict:
        return {'h1': self.h1, 'h2': self.h2, 'mu1': self.mu1.tolist(), 'mu2': self.mu2.tolist()}


def variation_sums(path: SampledPath) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-interval first and second order variation.

    Both sums are divided by T-1, as in the original scheme; the divisor
    cancels in every ratio the estimator uses.
    """
    grid = path.grid
    if not isinstance(grid, EquispacedScaleGrid):
        raise DomainError("variation sums need a path on an EquispacedScaleGrid")
    if grid.T < 3:
        raise DomainError(f"second-order variation needs T >= 3, got T={grid.T}")
    table = path.values.reshape(grid.M, grid.T)
    ss1 = np.sum(np.diff(table, n=1, axis=1) ** 2, axis=1) / (grid.T - 1)
    ss2 = np.sum(np.diff(table, n=2, axis=1) ** 2, axis=1) / (grid.T - 1)
    return ss1, ss2


def hurst_variation(path: SampledPath, lam: Optional[float] = None) -> HurstEstimate:
    """mu_(j,i) = log(SS_(j,i+1)/SS_(j,i)) / (2 log lambda); H_j is their mean."""
    ss1, ss2 = variation_sums(path)
    lam = path.grid.lam if lam is None else lam
    _check_replicates(path.grid.M)
    for order, ss in ((1, ss1), (2, ss2)):
        zero = np.flatnonzero(ss <= 0)
        if zero.size:
            raise DegenerateInputError(
                f"order-{order} variation vanishes in scale interval {int(zero[0])}")
    two_log_lam = 2 * math.log(lam)
    mu1 = np.log(ss1[1:] / ss1[:-1]) / two_log_lam
    mu2 = np.log(ss2[1:] / ss2[:-1]) / two_log_lam
    return HurstEstimate(float(np.mean(mu1)), float(np.mean(mu2)), mu1, mu2, ss1, ss2)


# =============================================================================
# GAUSSIAN MAXIMUM LIKELIHOOD
# =============================================================================

@dataclass(frozen=True)
class MleConfig:
    """Search interval, tolerance, model family and subsample size for hurst_mle."""
    h_range: Tuple[float, float] = MLE_CONFIG['h_range']
    tol: float = MLE_CONFIG['tol']
    family: str = MLE_CONFIG['family']
    cap: int = MLE_CONFIG['cap']
    points_per_scale: int = MLE_CONFIG['points_per_scale']
    profile_points: int = MLE_CONFIG['profile_points']

    def __post_init__(self):
        lo, hi = self.h_range
        if not 0 < lo <= hi < math.inf:
            raise DomainError(f"H search interval must satisfy 0 < lo <= hi, got {self.h_range}")
        if self.cap < 10:
            raise DomainError(f"subsample cap must be >= 10, got {self.cap}")
        if self.family not in ('sbm', 'sbm_random_drift'):
            raise DomainError(f"unknown MLE model family: {self.family}")


@dataclass
class MleEstimate:
    h: float
    profile_h: List[float] = field(default_factory=list)
    profile_loglik: List[float] = field(default_factory=list)
    n_points: int = 0

    def to_dict(self) -> Dict:
        return {'h_mle': self.h, 'n_points': self.n_points,
                'profile': {'H': self.profile_h, 'loglik': self.profile_loglik}}


def geometric_subsample(path: SampledPath, points_per_scale: int = None, cap: int = None) -> np.ndarray:
    """Indices of the grid points nearest lambda^(i + k/points_per_scale), thinned to at most cap."""
    points_per_scale = points_per_scale or MLE_CONFIG['points_per_scale']
    cap = cap or MLE_CONFIG['cap']
    times = path.grid.times()
    exponents = np.arange(path.grid.M * points_per_scale) / points_per_scale
    targets = times[0] * np.exp(exponents * math.log(path.grid.lam))
    right = np.clip(np.searchsorted(times, targets), 1, times.size - 1)
    left = right - 1
    nearest = np.where(targets - times[left] <= times[right] - targets, left, right)
    idx = np.unique(nearest)
    if idx.size > cap:
        idx = idx[np.unique(np.linspace(0, idx.size - 1, cap).round().astype(int))]
    logger.debug("MLE subsample: %d of %d points", idx.size, times.size)
    return idx


def mle_covariance(times, H: float, lam: float, family: str) -> np.ndarray:
    """Model covariance at the subsampled times."""
    drift = Drift.RANDOM if family == 'sbm_random_drift' else Drift.NONE
    return sbm_cov_matrix(SbmModel(H, lam, drift), times)


def gaussian_loglik(x, cov, jitter: float = None, steps: int = None) -> float:
    """Zero-mean Gaussian log-likelihood via Cholesky, adding diagonal jitter on failure."""
    jitter = MLE_CONFIG['jitter'] if jitter is None else jitter
    steps = MLE_CONFIG['jitter_steps'] if steps is None else steps
    x = np.asarray(x, dtype=float)
    scale = float(np.mean(np.diag(cov)))
    for attempt in range(steps + 1):
        added = 0.0 if attempt == 0 else jitter * scale * 100.0 ** (attempt - 1)
        try:
            factor = cho_factor(cov + added * np.eye(x.size), lower=True)
            break
        except LinAlgError:
            logger.debug("Cholesky failed with jitter %.3g", added)
    else:
        raise NumericalError(f"covariance not positive definite after {steps} jitter steps")
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    quad = x @ cho_solve(factor, x)
    return float(-0.5 * (logdet + quad + x.size * math.log(2 * math.pi)))


def hurst_mle(path: SampledPath, config: Optional[MleConfig] = None) -> MleEstimate:
    """
    Maximize the Gaussian likelihood over H on a geometric subsample.

    A coarse profile locates the best bracket; a bounded golden-section/Brent
    search refines it to config.tol.
    """
    config = config or MleConfig()
    idx = geometric_subsample(path, config.points_per_scale, config.cap)
    times = path.grid.times()[idx]
    x = path.values[idx]
    lam = path.grid.lam

    def loglik(H):
        return gaussian_loglik(x, mle_covariance(times, H, lam, config.family))

    lo, hi = config.h_range
    if hi == lo:
        return MleEstimate(lo, [lo], [loglik(lo)], idx.size)

    grid_h = np.linspace(lo, hi, max(config.profile_points, 3))
    profile = np.array([loglik(H) for H in grid_h])
    if np.ptp(profile) < MLE_CONFIG['flat_profile_tol']:
        warnings.warn("log-likelihood profile is flat over the H search interval", stacklevel=2)

    best = int(np.argmax(profile))
    bracket = (grid_h[max(best - 1, 0)], grid_h[min(best + 1, grid_h.size - 1)])
    result = minimize_scalar(lambda H: -loglik(H), bounds=bracket, method='bounded',
                             options={'xatol': config.tol})
    h_hat = float(result.x) if -result.fun >= profile[best] else float(grid_h[best])
    return MleEstimate(h_hat, grid_h.tolist(), profile.tolist(), idx.size)
