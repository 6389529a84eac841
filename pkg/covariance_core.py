"""
Covariance Core Module
Exact covariance algebra of discrete scale invariant Markov (DSIM) sequences.

A DSIM covariance is fixed by 2T numbers r0[j] = R_j(0), r1[j] = R_j(1)
(j = 0 ... T-1) plus (H, alpha, T). Everything else is rebuilt from the
Markov factorization R_n(tau) = G(alpha^n) K(alpha^(n+tau)) and the scale
identity R_(n+T)(tau) = lambda^(2H) R_n(tau).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Tuple

import numpy as np

from config import COVARIANCE_CONFIG
from errors import DegenerateInputError, DomainError
from exports import write_csv
from process_sim import DsiarModel, Drift, SbmModel, check_causal
from scale_grid import interval_index, interval_indices

logger = logging.getLogger(__name__)


def real_power(base: float, exponent: float) -> float:
    """base**exponent in exp/log form."""
    return math.exp(exponent * math.log(base))


@dataclass(frozen=True, eq=False)
class SeasonalCovariance:
    """The seasonal table {R_j(0), R_j(1)} with its (H, alpha, T)."""
    H: float
    alpha: float
    T: int
    r0: np.ndarray
    r1: np.ndarray

    def __post_init__(self):
        if not self.H > 0:
            raise DomainError(f"H must be > 0, got {self.H}")
        if not self.alpha > 1:
            raise DomainError(f"alpha must be > 1, got {self.alpha}")
        r0 = np.array(self.r0, dtype=float).ravel()
        r1 = np.array(self.r1, dtype=float).ravel()
        if r0.size != self.T or r1.size != self.T:
            raise DomainError(f"r0 and r1 need {self.T} entries each")
        if not (np.all(np.isfinite(r0)) and np.all(np.isfinite(r1))):
            raise DomainError("covariance table must be finite")
        if np.any(r0 <= 0):
            bad = [int(j) for j in np.flatnonzero(r0 <= 0)]
            raise DegenerateInputError(f"R_j(0) must be > 0; fails at j = {bad}")
        if np.any(r1 == 0):
            bad = [int(j) for j in np.flatnonzero(r1 == 0)]
            raise DegenerateInputError(f"R_j(1) must be nonzero; fails at j = {bad}")
        r0.setflags(write=False)
        r1.setflags(write=False)
        object.__setattr__(self, 'r0', r0)
        object.__setattr__(self, 'r1', r1)

    @property
    def lam(self) -> float:
        return self.alpha ** self.T

    @property
    def scale_factor(self) -> float:
        """lambda^(2H) = alpha^(2TH)."""
        return real_power(self.alpha, 2 * self.T * self.H)

    @property
    def ratios(self) -> np.ndarray:
        return self.r1 / self.r0

    def to_dict(self) -> Dict:
        return {'H': self.H, 'alpha': self.alpha, 'T': self.T,
                'r0': self.r0.tolist(), 'r1': self.r1.tolist()}

    @classmethod
    def from_dict(cls, data: Dict) -> 'SeasonalCovariance':
        return cls(float(data['H']), float(data['alpha']), int(data['T']), data['r0'], data['r1'])


def h_ratio(cov: SeasonalCovariance, j: int) -> float:
    """h(alpha^j) = R_j(1)/R_j(0), T-periodic in j."""
    if j < 0:
        raise DomainError(f"h_ratio needs j >= 0, got {j}")
    j %= cov.T
    return float(cov.r1[j] / cov.r0[j])


def h_tilde(cov: SeasonalCovariance, r: int) -> float:
    """Product of h(alpha^j) for j = 0 ... r, with h_tilde(-1) = 1."""
    if r < -1:
        raise DomainError(f"h_tilde needs r >= -1, got {r}")
    if r == -1:
        return 1.0
    k, i = divmod(r, cov.T)
    ratios = cov.ratios
    return float(np.prod(ratios) ** k * np.prod(ratios[:i + 1]))


def covariance_dsim(cov: SeasonalCovariance, n: int, tau: int) -> float:
    """R_n(tau) = E[X(alpha^(n+tau)) X(alpha^n)] for n >= 0, n + tau >= 0."""
    if n < 0 or n + tau < 0:
        raise DomainError(f"covariance needs n >= 0 and n + tau >= 0, got n={n}, tau={tau}")
    if tau < 0:
        return covariance_dsim(cov, n + tau, -tau)
    r, i = divmod(n, cov.T)
    k, v = divmod(tau, cov.T)
    value = h_tilde(cov, cov.T - 1) ** k * h_tilde(cov, v + i - 1) / h_tilde(cov, i - 1) * cov.r0[i]
    if r:
        value *= real_power(cov.alpha, 2 * r * cov.T * cov.H)
    return float(value)


def covariance_matrix(cov: SeasonalCovariance, indices: Iterable[int]) -> np.ndarray:
    """Matrix of E[X(alpha^a) X(alpha^b)] over the given lattice indices."""
    idx = list(indices)
    out = np.empty((len(idx), len(idx)))
    for p, a in enumerate(idx):
        for q, b in enumerate(idx[p:], start=p):
            out[p, q] = out[q, p] = covariance_dsim(cov, min(a, b), abs(a - b))
    return out


def write_covariance_csv(filepath, cov: SeasonalCovariance, indices: Iterable[int]) -> int:
    """`n,tau,value` rows for every pair n <= n + tau of the index set."""
    idx = sorted(set(indices))
    matrix = covariance_matrix(cov, idx)
    rows = ((a, b - a, matrix[p, q])
            for p, a in enumerate(idx) for q, b in enumerate(idx) if b >= a)
    return write_csv(filepath, ['n', 'tau', 'value'], rows)


# =============================================================================
# ADMISSIBILITY AND MARKOV CHECKS
# =============================================================================

@dataclass
class AdmissibilityReport:
    """Per-index margins r0[j] r0[j+1] - r1[j]^2 (with R_T(0) = lambda^(2H) r0[0])."""
    ok: bool
    margins: List[float] = field(default_factory=list)
    violations: List[int] = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def to_dict(self) -> Dict:
        return {'admissible': self.ok, 'margins': self.margins, 'violations': self.violations}


def admissible(cov: SeasonalCovariance, rtol: float = None) -> AdmissibilityReport:
    """Check (R_j(1))^2 <= R_j(0) R_(j+1)(0) for j = 0 ... T-1."""
    rtol = COVARIANCE_CONFIG['admissible_rtol'] if rtol is None else rtol
    following = np.append(cov.r0[1:], cov.scale_factor * cov.r0[0])
    bound = cov.r0 * following
    margins = bound - cov.r1 ** 2
    violations = [int(j) for j in np.flatnonzero(margins < -rtol * bound)]
    if violations:
        logger.debug("inadmissible table, violations at %s", violations)
    return AdmissibilityReport(not violations, margins.tolist(), violations)


def markov_product_check(R: Callable[[int, int], float], indices: Iterable) -> float:
    """
    Largest relative defect |R(n1,n)R(n,n2) - R(n,n)R(n1,n2)| over n1 <= n <= n2.

    The worst defect is divided by the largest product over all triples.
    """
    idx = sorted(indices)
    matrix = np.array([[R(a, b) for b in idx] for a in idx], dtype=float)
    worst, largest = 0.0, 0.0
    for c in range(len(idx)):
        lhs = np.outer(matrix[:c + 1, c], matrix[c, c:])
        rhs = matrix[c, c] * matrix[:c + 1, c:]
        worst = max(worst, float(np.abs(lhs - rhs).max()))
        largest = max(largest, float(np.abs(lhs).max()), float(np.abs(rhs).max()))
    return worst / largest if largest > 0 else 0.0


def borisov_factors(cov: SeasonalCovariance, indices: Iterable[int]) -> Tuple[np.ndarray, np.ndarray]:
    """G and K with R_n(tau) = G(alpha^n) K(alpha^(n+tau)), normalized by K(1) = 1."""
    idx = list(indices)
    K = np.array([h_tilde(cov, n - 1) for n in idx])
    G = np.array([covariance_dsim(cov, n, 0) for n in idx]) / K
    return G, K


def gk_ratio(cov: SeasonalCovariance, n_max: int) -> np.ndarray:
    """G/K along 0 ... n_max; nondecreasing exactly when the table is admissible."""
    G, K = borisov_factors(cov, range(n_max + 1))
    return G / K


def fbm_cov(H: float, t: float, s: float) -> float:
    """Fractional Brownian motion covariance (non-Markov unless H = 1/2)."""
    return 0.5 * (abs(t) ** (2 * H) + abs(s) ** (2 * H) - abs(t - s) ** (2 * H))


# =============================================================================
# SIMPLE BROWNIAN MOTION ORACLES
# =============================================================================

def sbm_cov(model: SbmModel, t: float, s: float) -> float:
    """Cov(X(t), X(s)) = lam^((n+m)H') min(t, s), plus lam^(2nH') lam^n for a shared random drift."""
    if t < 1 or s < 1:
        raise DomainError(f"simple Brownian motion is defined for t >= 1, got t={t}, s={s}")
    n = interval_index(t, model.lam)
    m = interval_index(s, model.lam)
    value = real_power(model.lam, (n + m) * model.H_prime) * min(t, s)
    if model.drift is Drift.RANDOM and n == m:
        value += real_power(model.lam, 2 * n * model.H_prime + n)
    return value


def sbm_cov_matrix(model: SbmModel, times) -> np.ndarray:
    """sbm_cov over all pairs of times."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 1):
        raise DomainError("simple Brownian motion is defined for t >= 1")
    n = interval_indices(t, model.lam)
    log_lam = math.log(model.lam)
    cov = np.exp(np.add.outer(n, n) * model.H_prime * log_lam) * np.minimum.outer(t, t)
    if model.drift is Drift.RANDOM:
        same = np.equal.outer(n, n)
        cov += same * np.exp((2 * n * model.H_prime + n) * log_lam)[:, None]
    return cov


def sbm_seasonal(H: float, alpha: float, T: int) -> SeasonalCovariance:
    """Seasonal table of simple Brownian motion sampled at alpha^n, lambda = alpha^T."""
    H_prime = H - 0.5
    r0 = np.exp((2 * T * H_prime + np.arange(T)) * math.log(alpha))
    r1 = r0.copy()
    r1[T - 1] *= real_power(alpha, T * H_prime)
    return SeasonalCovariance(H, alpha, T, r0, r1)


# =============================================================================
# DSIAR(1)
# =============================================================================

def _require_order_one(model: DsiarModel):
    if model.p != 1:
        raise DomainError(f"closed-form covariance is only available for DSIAR(1), got p={model.p}")


def dsiar1_r0(model: DsiarModel) -> np.ndarray:
    """
    r0[j] = alpha^(2jH) Var(Y(j)) for the stationary PC counterpart.

    Var(Y(n)) = a(n)^2 Var(Y(n-1)) + sigma_n^2 with a(n) = alpha^(-H) theta(alpha^(n-1)),
    closed over one period.
    """
    _require_order_one(model)
    pcar = model.to_pcar()
    check_causal(pcar)
    a2 = pcar.phi[0] ** 2
    s2 = pcar.sigma ** 2
    T = model.T

    carry = 0.0
    for n in range(1, T + 1):
        carry = a2[n % T] * carry + s2[n % T]
    var = np.empty(T)
    var[0] = carry / (1.0 - float(np.prod(a2)))
    for j in range(1, T):
        var[j] = a2[j] * var[j - 1] + s2[j]
    return np.exp(2 * np.arange(T) * model.H * math.log(model.alpha)) * var


def _nonzero_theta(model: DsiarModel) -> np.ndarray:
    theta = model.theta[0]
    if np.any(theta == 0):
        bad = [int(j) for j in np.flatnonzero(theta == 0)]
        raise DegenerateInputError(f"theta(alpha^j) = 0 at j = {bad}; the covariance table degenerates")
    return theta


def dsiar1_seasonal(model: DsiarModel) -> SeasonalCovariance:
    """Seasonal table of a causal DSIAR(1): r1[j] = theta(alpha^j) r0[j]."""
    _require_order_one(model)
    theta = _nonzero_theta(model)
    r0 = dsiar1_r0(model)
    return SeasonalCovariance(model.H, model.alpha, model.T, r0, theta * r0)


def dsiar1_covariance(model: DsiarModel, n: int, k: int, v: int) -> float:
    """R_n(kT + v) = [prod_j theta(alpha^j)]^k prod_(j=n)^(n+v-1) theta(alpha^j) R_n(0)."""
    _require_order_one(model)
    T = model.T
    if not (0 <= n < T and 0 <= v < T and k >= 0):
        raise DomainError(f"need 0 <= n, v <= T-1 and k >= 0, got n={n}, k={k}, v={v}")
    theta = _nonzero_theta(model)
    r0 = dsiar1_r0(model)
    partial = np.prod(theta[np.arange(n, n + v) % T])
    return float(np.prod(theta) ** k * partial * r0[n])
