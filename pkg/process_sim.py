"""
Process Simulation Module
Seeded simulators for Brownian motion on arbitrary lattices, simple Brownian
motion with drift (deterministic or random), PCAR(p) and DSIAR(p).
"""

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Union

import numpy as np

from config import SIM_CONFIG
from errors import DomainError, PreconditionError, UsageError
from scale_grid import (EquispacedScaleGrid, SampledPath, ScaleGrid,
                        interval_indices, lamperti_forward)

logger = logging.getLogger(__name__)


def make_rng(seed, replicate: int = 0) -> np.random.Generator:
    """
    Counter-based stream keyed by (seed, replicate).

    Replicates of one seed are independent and can be generated in any order.
    """
    if seed is None:
        raise UsageError("a seed is required for stochastic runs")
    if int(seed) < 0 or int(replicate) < 0:
        raise UsageError("seed and replicate index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replicate)])))


# =============================================================================
# MODELS
# =============================================================================

class Drift(str, Enum):
    NONE = 'none'
    CONSTANT = 'constant'
    SIN = 'sin'
    RANDOM = 'random'

    @classmethod
    def parse(cls, value) -> 'Drift':
        if isinstance(value, cls):
            return value
        aliases = {'sinusoidal': 'sin', 'const': 'constant', None: 'none'}
        value = aliases.get(value, value)
        try:
            return cls(value)
        except ValueError:
            raise DomainError(f"unknown drift: {value}") from None


@dataclass(frozen=True)
class SbmModel:
    """Simple Brownian motion with index H and scale lam, optionally drifted."""
    H: float
    lam: float
    drift: Drift = Drift.NONE
    a: float = 0.0

    def __post_init__(self):
        if not self.H > 0:
            raise DomainError(f"H must be > 0, got {self.H}")
        if not self.lam > 1:
            raise DomainError(f"lambda must be > 1, got {self.lam}")
        object.__setattr__(self, 'drift', Drift.parse(self.drift))

    @property
    def H_prime(self) -> float:
        return self.H - 0.5


def _as_table(values, name: str, T: Optional[int] = None) -> np.ndarray:
    table = np.atleast_2d(np.array(values, dtype=float))
    if T is not None and table.shape[1] != T:
        raise DomainError(f"{name} must have {T} columns, got {table.shape[1]}")
    if not np.all(np.isfinite(table)):
        raise DomainError(f"{name} must be finite")
    table.setflags(write=False)
    return table


def _as_sigma(values, T: int) -> np.ndarray:
    sigma = np.array(values, dtype=float).ravel()
    if sigma.size != T:
        raise DomainError(f"sigma must have {T} entries, got {sigma.size}")
    if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
        raise DomainError("noise standard deviations must be finite and > 0")
    sigma.setflags(write=False)
    return sigma


@dataclass(frozen=True, eq=False)
class PcarModel:
    """Y(n) = sum_i phi[i-1, n mod T] Y(n-i) + Z(n), Z(n) ~ N(0, sigma[n mod T]^2)."""
    phi: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        phi = _as_table(self.phi, 'phi')
        object.__setattr__(self, 'phi', phi)
        object.__setattr__(self, 'sigma', _as_sigma(self.sigma, phi.shape[1]))

    @property
    def p(self) -> int:
        return self.phi.shape[0]

    @property
    def T(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True, eq=False)
class DsiarModel:
    """
    X(a^n) = sum_i theta[i-1, (n-i) mod T] X(a^(n-i)) + Z~(a^n).

    sigma holds the standard deviations of the PC-counterpart noise Z(j);
    the scale-invariant noise is Z~(a^n) = a^(nH) Z(n).
    """
    H: float
    alpha: float
    theta: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if not self.H > 0:
            raise DomainError(f"H must be > 0, got {self.H}")
        if not self.alpha > 1:
            raise DomainError(f"alpha must be > 1, got {self.alpha}")
        theta = _as_table(self.theta, 'theta')
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'sigma', _as_sigma(self.sigma, theta.shape[1]))

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    @property
    def T(self) -> int:
        return self.theta.shape[1]

    @property
    def lam(self) -> float:
        return self.alpha ** self.T

    def to_pcar(self) -> PcarModel:
        """PC counterpart: phi_i(n) = alpha^(-iH) theta_i(alpha^(n-i))."""
        phi = np.empty_like(self.theta)
        seasons = np.arange(self.T)
        for i in range(1, self.p + 1):
            phi[i - 1] = math.exp(-i * self.H * math.log(self.alpha)) * self.theta[i - 1, (seasons - i) % self.T]
        return PcarModel(phi, self.sigma)


ProcessModel = Union[SbmModel, DsiarModel, PcarModel]


def check_causal(model: PcarModel) -> float:
    """
    Product-of-coefficients test for PCAR(1); returns |prod phi|.

    Orders p >= 2 have no closed criterion here and only get a warning.
    """
    if model.p == 1:
        product = abs(float(np.prod(model.phi[0])))
        if product >= 1:
            raise PreconditionError(
                f"PCAR(1) is not causal: |prod phi| = {product:.6g} >= 1", diagnostic=product)
        return product
    warnings.warn(f"no stability check for PCAR({model.p}); simulating anyway", stacklevel=3)
    return float('nan')


# =============================================================================
# SIMULATORS
# =============================================================================

def simulate_brownian(times, seed=None, replicate: int = 0,
                      rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Standard Brownian motion at increasing times (B(0) = 0)."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("times must be a non-empty sequence")
    if t[0] < 0:
        raise DomainError("times must be >= 0")
    if np.any(np.diff(t) <= 0):
        raise DomainError("times must be strictly increasing")
    rng = rng if rng is not None else make_rng(seed, replicate)
    steps = np.diff(t, prepend=0.0)
    return np.cumsum(np.sqrt(steps) * rng.standard_normal(t.size))


def sbm_drift(model: SbmModel, times: np.ndarray, n: np.ndarray,
              rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """D_n(t) for each time; the random drift draws W_1 ... W_max(n) from rng."""
    half = model.lam ** (n / 2.0)
    if model.drift is Drift.NONE:
        return np.zeros_like(times)
    if model.drift is Drift.CONSTANT:
        return half * model.a
    if model.drift is Drift.SIN:
        return half * np.sin(model.lam ** (-n.astype(float)) * times)
    w = rng.standard_normal(int(n.max()))
    return half * w[n - 1]


def simulate_sbm(model: SbmModel, grid: Union[ScaleGrid, EquispacedScaleGrid],
                 seed, replicate: int = 0) -> SampledPath:
    """
    X(t) = lam^(n H') [B(t) + D_n(t)] for t in [lam^(n-1), lam^n).

    One Brownian path is shared by all scale intervals.
    """
    times = grid.times()
    if times[0] < 1:
        raise DomainError(f"simple Brownian motion is defined for t >= 1, got {times[0]}")
    rng = make_rng(seed, replicate)
    n = interval_indices(times, model.lam)
    b = simulate_brownian(times, rng=rng)
    drift = sbm_drift(model, times, n, rng)
    values = model.lam ** (n * model.H_prime) * (b + drift)
    meta = {'model': 'sbm', 'seed': seed, 'H': model.H, 'replicate': replicate,
            'drift': model.drift.value}
    return SampledPath(grid, values, meta)


def simulate_pcar(model: PcarModel, n_steps: int, seed, burn_in: Optional[int] = None,
                  replicate: int = 0) -> np.ndarray:
    """
    Run the PCAR recursion from zeros for burn_in steps, then emit n_steps values.

    The first emitted value is season 0.
    """
    check_causal(model)
    if burn_in is None:
        burn_in = SIM_CONFIG['burn_in_periods'] * model.T
    if n_steps < 1 or burn_in < 0:
        raise DomainError("n_steps must be >= 1 and burn_in >= 0")
    logger.debug("PCAR(%d) T=%d: %d burn-in + %d steps", model.p, model.T, burn_in, n_steps)

    rng = make_rng(seed, replicate)
    total = burn_in + n_steps
    p, T = model.p, model.T
    noise = rng.standard_normal(total)
    y = np.zeros(total + p)
    for m in range(total):
        season = (m - burn_in) % T
        y[p + m] = model.phi[:, season] @ y[m:m + p][::-1] + model.sigma[season] * noise[m]
    return y[p + burn_in:].copy()


def simulate_dsiar(model: DsiarModel, grid: ScaleGrid, seed, burn_in: Optional[int] = None,
                   replicate: int = 0) -> SampledPath:
    """Simulate the PC counterpart and map it back with X(alpha^n) = alpha^(nH) Y(n)."""
    if not isinstance(grid, ScaleGrid):
        raise DomainError("DSIAR paths live on a geometric ScaleGrid")
    if grid.T != model.T or not math.isclose(grid.alpha, model.alpha, rel_tol=1e-12):
        raise DomainError(
            f"grid (alpha={grid.alpha}, T={grid.T}) does not match model (alpha={model.alpha}, T={model.T})")
    y = simulate_pcar(model.to_pcar(), grid.size, seed, burn_in, replicate)
    values = lamperti_forward(model.H, model.alpha, y)
    meta = {'model': 'dsiar', 'seed': seed, 'H': model.H, 'replicate': replicate}
    return SampledPath(grid, values, meta)


# =============================================================================
# MODEL SPECS (JSON)
# =============================================================================

def model_from_spec(spec: Dict) -> ProcessModel:
    """Build a model from `{type, H, alpha, lambda, T, p, theta, sigma, drift, a}`."""
    kind = str(spec.get('type', 'sbm')).lower()
    if kind == 'sbm':
        lam = spec.get('lambda')
        if lam is None:
            if spec.get('alpha') is None or spec.get('T') is None:
                raise UsageError("sbm needs lambda, or alpha and T")
            lam = float(spec['alpha']) ** int(spec['T'])
        return SbmModel(float(spec['H']), float(lam), spec.get('drift', 'none'),
                        float(spec.get('a', SIM_CONFIG['a'])))
    if kind == 'dsiar':
        theta = spec['theta']
        sigma = spec.get('sigma') or [1.0] * len(np.atleast_2d(theta)[0])
        return DsiarModel(float(spec['H']), float(spec['alpha']), theta, sigma)
    if kind == 'pcar':
        phi = spec.get('phi', spec.get('theta'))
        if phi is None:
            raise UsageError("pcar needs phi (or theta) coefficients")
        sigma = spec.get('sigma') or [1.0] * len(np.atleast_2d(phi)[0])
        return PcarModel(phi, sigma)
    raise UsageError(f"unknown model type: {kind}")


def model_to_spec(model: ProcessModel) -> Dict:
    """Inverse of model_from_spec."""
    if isinstance(model, SbmModel):
        return {'type': 'sbm', 'H': model.H, 'lambda': model.lam,
                'drift': model.drift.value, 'a': model.a}
    if isinstance(model, DsiarModel):
        return {'type': 'dsiar', 'H': model.H, 'alpha': model.alpha, 'T': model.T, 'p': model.p,
                'theta': model.theta.tolist(), 'sigma': model.sigma.tolist()}
    return {'type': 'pcar', 'T': model.T, 'p': model.p,
            'theta': model.phi.tolist(), 'sigma': model.sigma.tolist()}
