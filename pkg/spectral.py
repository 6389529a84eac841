"""
Spectral Module
T-dimensional self-similar embedding of a DSIM sequence, its covariance
matrices Q(n, tau), the spectral density matrix of the stationary
counterpart, a quadrature inversion check, and the season-index DFT
coefficients of the covariance.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np

from config import SPECTRAL_CONFIG
from covariance_core import SeasonalCovariance, admissible, covariance_dsim, h_tilde, real_power
from errors import DomainError, PreconditionError
from exports import write_csv
from scale_grid import SampledPath, ScaleGrid

logger = logging.getLogger(__name__)


def embed_multidim(path: SampledPath) -> np.ndarray:
    """(T, M) array; row k at scale n is X(alpha^(nT + k))."""
    grid = path.grid
    if not isinstance(grid, ScaleGrid):
        raise DomainError("the multidimensional embedding needs a geometric ScaleGrid")
    count = grid.M * grid.T
    return path.values[:count].reshape(grid.M, grid.T).T.copy()


def _g(cov: SeasonalCovariance) -> np.ndarray:
    """h_tilde(j - 1) for j = 0 ... T-1."""
    return np.array([h_tilde(cov, j - 1) for j in range(cov.T)])


def c_matrix(cov: SeasonalCovariance) -> np.ndarray:
    """C_jk = h_tilde(j-1) / h_tilde(k-1)."""
    g = _g(cov)
    return np.outer(g, 1.0 / g)


def rho(cov: SeasonalCovariance) -> float:
    """alpha^(-HT) h_tilde(T-1): the one-scale decay of the stationary counterpart."""
    return h_tilde(cov, cov.T - 1) / real_power(cov.alpha, cov.H * cov.T)


# =============================================================================
# Q MATRICES
# =============================================================================

@dataclass(frozen=True, eq=False)
class QMatrix:
    """Q(n, tau)_jk = E[V^j(lambda^(n+tau)) V^k(lambda^n)]."""
    values: np.ndarray
    n: int
    tau: int
    H: float
    alpha: float
    T: int

    def rows(self) -> Iterable[Tuple]:
        for j in range(self.T):
            for k in range(self.T):
                yield self.n, self.tau, j, k, self.values[j, k]


def _require_admissible(cov: SeasonalCovariance):
    report = admissible(cov)
    if not report.ok:
        raise PreconditionError(
            f"covariance table is not admissible at j = {report.violations}", diagnostic=report.violations)


def _q_values(cov: SeasonalCovariance, n: int, tau: int) -> np.ndarray:
    scale = real_power(cov.alpha, 2 * n * cov.H * cov.T)
    if tau >= 1:
        return scale * c_matrix(cov) * cov.r0[None, :] * h_tilde(cov, cov.T - 1) ** tau
    if tau == 0:
        values = np.empty((cov.T, cov.T))
        for j in range(cov.T):
            for k in range(cov.T):
                values[j, k] = covariance_dsim(cov, min(j, k), abs(j - k))
        return scale * values
    return real_power(cov.alpha, 2 * tau * cov.H * cov.T) * _q_values(cov, n, -tau).T


def q_matrix(cov: SeasonalCovariance, n: int, tau: int) -> QMatrix:
    """
    Covariance matrix of the embedding at scales n + tau and n.

    Lags tau >= 1 use the Markov product form lambda^(2nH) C R h_tilde(T-1)^tau,
    tau = 0 is the symmetric within-scale covariance, and negative lags follow
    from Q(n, tau) = lambda^(2 tau H) Q(n, -tau)^T.
    """
    _require_admissible(cov)
    return QMatrix(_q_values(cov, n, tau), n, tau, cov.H, cov.alpha, cov.T)


# =============================================================================
# SPECTRAL DENSITY MATRIX
# =============================================================================

def stationary_covariance(cov: SeasonalCovariance, m: int) -> np.ndarray:
    """Lag-m covariance of the normalized embedding: rho^m C R, transposed for m < 0."""
    base = c_matrix(cov) * cov.r0[None, :]
    if m >= 0:
        return rho(cov) ** m * base
    return rho(cov) ** (-m) * base.T


class SpectralDensityMatrix:
    """
    d(omega) = (1/2pi) sum_m Gamma(m) exp(-i m T omega) in closed form.

    Needs |rho| < 1 for the geometric series to converge.
    """

    def __init__(self, cov: SeasonalCovariance):
        self.cov = cov
        self.rho = rho(cov)
        if not abs(self.rho) < 1:
            raise PreconditionError(
                f"spectral density needs |rho| < 1, got rho = {self.rho:.6g}", diagnostic=self.rho)
        g = _g(cov)
        self._forward = np.outer(g, cov.r0 / g)
        self._backward = np.outer(cov.r0 / g, g)

    @property
    def T(self) -> int:
        return self.cov.T

    def __call__(self, omega: float) -> np.ndarray:
        z = np.exp(-1j * omega * self.T)
        return (self._forward / (1 - z * self.rho)
                - self._backward / (1 - z / self.rho)) / (2 * math.pi)

    def on_grid(self, omegas) -> np.ndarray:
        """(len(omegas), T, T) stack."""
        return np.stack([self(w) for w in np.asarray(omegas, dtype=float)])


def spectral_density(cov: SeasonalCovariance, omega: float) -> np.ndarray:
    return SpectralDensityMatrix(cov)(omega)


def omega_grid(points: int = None) -> np.ndarray:
    """Uniform grid on [0, 2pi)."""
    points = points or SPECTRAL_CONFIG['omega_points']
    if points < 1:
        raise DomainError(f"omega grid needs at least one point, got {points}")
    return 2 * math.pi * np.arange(points) / points


def quadrature_check(cov: SeasonalCovariance, j: int, r: int, m: int,
                     points: int = None) -> Tuple[float, float, float]:
    """
    Invert d numerically: integral over [0, 2pi) of exp(i m T omega) d_jr(omega)
    by the periodic trapezoid rule, against stationary_covariance(m)[j, r].
    """
    points = points or SPECTRAL_CONFIG['quadrature_points']
    density = SpectralDensityMatrix(cov)
    if not (0 <= j < cov.T and 0 <= r < cov.T):
        raise DomainError(f"j and r must be in 0 ... {cov.T - 1}")
    omegas = omega_grid(points)
    z = np.exp(-1j * omegas * cov.T)
    g = _g(cov)
    forward = g[j] * cov.r0[r] / g[r]
    backward = cov.r0[j] * g[r] / g[j]
    values = (forward / (1 - z * density.rho) - backward / (1 - z / density.rho)) / (2 * math.pi)
    integral = complex(np.sum(np.exp(1j * m * cov.T * omegas) * values) * 2 * math.pi / points)
    lhs = integral.real
    rhs = float(stationary_covariance(cov, m)[j, r])
    logger.debug("quadrature j=%d r=%d m=%d: imag residue %.3g", j, r, m, integral.imag)
    return lhs, rhs, abs(lhs - rhs)


# =============================================================================
# SEASON-INDEX DFT
# =============================================================================

@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    """B_k(tau) with R_n(tau) = alpha^((2n+tau)H) sum_k B_k(tau) exp(2 pi i k n / T)."""
    tau: int
    values: np.ndarray
    H: float
    alpha: float
    T: int

    def covariance(self, n: int) -> float:
        phases = np.exp(2j * math.pi * np.arange(self.T) * n / self.T)
        total = complex(np.sum(self.values * phases))
        return real_power(self.alpha, (2 * n + self.tau) * self.H) * total.real


def spectral_coefficients(cov: SeasonalCovariance, tau: int) -> SpectralCoefficients:
    """
    DFT over one season window of alpha^(-(2n+tau)H) R_n(tau).

    The summand is T-periodic in n, so negative lags use the first window
    with n + tau >= 0.
    """
    _require_admissible(cov)
    start = max(0, -tau)
    seasons = np.empty(cov.T)
    for n in range(start, start + cov.T):
        seasons[n % cov.T] = covariance_dsim(cov, n, tau) / real_power(cov.alpha, (2 * n + tau) * cov.H)
    return SpectralCoefficients(tau, np.fft.fft(seasons) / cov.T, cov.H, cov.alpha, cov.T)


# =============================================================================
# CSV EXPORT
# =============================================================================

def write_spectral_csv(filepath, density: SpectralDensityMatrix, omegas) -> int:
    """`omega,j,r,re,im` rows; returns the row count."""
    def rows():
        for omega in omegas:
            d = density(omega)
            for j in range(density.T):
                for r in range(density.T):
                    yield omega, j, r, d[j, r].real, d[j, r].imag
    return write_csv(filepath, ['omega', 'j', 'r', 're', 'im'], rows())


def write_q_csv(filepath, matrices: List[QMatrix]) -> int:
    """`n,tau,j,k,value` rows."""
    rows = (row for q in matrices for row in q.rows())
    return write_csv(filepath, ['n', 'tau', 'j', 'k', 'value'], rows)
