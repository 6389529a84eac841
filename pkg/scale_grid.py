"""
Scale Grid Module
Geometric and equispaced-in-scale sampling lattices, scale-interval arithmetic,
the quasi-Lamperti transform pair, and the Path CSV format.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from config import GRID_CONFIG
from errors import DomainError
from exports import read_csv, read_json, sidecar_path, write_csv, write_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScaleGrid:
    """Geometric lattice base * alpha**k, k = 0 ... M*T (endpoint included)."""
    alpha: float
    T: int
    M: int
    base: float = 1.0

    def __post_init__(self):
        if not self.alpha > 1:
            raise DomainError(f"alpha must be > 1, got {self.alpha}")
        if int(self.T) != self.T or self.T < 1:
            raise DomainError(f"T must be a positive integer, got {self.T}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M}")
        if not self.base > 0:
            raise DomainError(f"base must be > 0, got {self.base}")

    @property
    def lam(self) -> float:
        return self.alpha ** self.T

    @property
    def size(self) -> int:
        return self.M * self.T + 1

    def times(self) -> np.ndarray:
        return self.base * self.alpha ** np.arange(self.size, dtype=float)

    def describe(self) -> Dict:
        return {'grid': 'geometric', 'alpha': self.alpha, 'T': self.T, 'M': self.M,
                'base': self.base, 'lambda': self.lam}


@dataclass(frozen=True)
class EquispacedScaleGrid:
    """
    T equally spaced points in [1, lambda), repeated in each of M scale intervals
    with every interval lambda times the previous one.
    """
    lam: float
    T: int
    M: int

    def __post_init__(self):
        if not self.lam > 1:
            raise DomainError(f"lambda must be > 1, got {self.lam}")
        if int(self.T) != self.T or self.T < 1:
            raise DomainError(f"T must be a positive integer, got {self.T}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M}")

    @property
    def size(self) -> int:
        return self.M * self.T

    def first_interval(self) -> np.ndarray:
        """t_k = 1 + (k - 1)(lambda - 1)/T for k = 1 ... T."""
        return 1.0 + np.arange(self.T) * (self.lam - 1.0) / self.T

    def time_table(self) -> np.ndarray:
        """(M, T) table; row i+1 is row i times lambda."""
        table = np.empty((self.M, self.T))
        table[0] = self.first_interval()
        for i in range(1, self.M):
            table[i] = table[i - 1] * self.lam
        return table

    def times(self) -> np.ndarray:
        return self.time_table().ravel()

    def describe(self) -> Dict:
        return {'grid': 'equispaced', 'lambda': self.lam, 'T': self.T, 'M': self.M}


Grid = Union[ScaleGrid, EquispacedScaleGrid]


@dataclass(frozen=True, eq=False)
class SampledPath:
    """A realized process at grid times plus provenance."""
    grid: Grid
    values: np.ndarray
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size != self.grid.size:
            raise DomainError(
                f"path has {values.size} values but the grid has {self.grid.size} points")
        if not np.all(np.isfinite(values)):
            raise DomainError("path values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def H(self) -> Optional[float]:
        return self.meta.get('H')

    def scaled(self, factor: float) -> 'SampledPath':
        return SampledPath(self.grid, self.values * factor, dict(self.meta))

    def shifted(self, offset: float) -> 'SampledPath':
        return SampledPath(self.grid, self.values + offset, dict(self.meta))


def grid_times(grid: Grid) -> np.ndarray:
    """Strictly increasing sampling times of a grid."""
    return grid.times()


def interval_indices(times, lam: float, snap: Optional[float] = None) -> np.ndarray:
    """
    Vectorized interval_index: n with lam**(n-1) <= t < lam**n.

    Times within relative `snap` of a power of lam are put in the interval that
    power opens, so alpha**(k*T) and (alpha**T)**k land on the same side.
    """
    snap = GRID_CONFIG['boundary_snap'] if snap is None else snap
    t = np.asarray(times, dtype=float)
    if np.any(t <= 0):
        raise DomainError("interval index needs t > 0")
    if not lam > 1:
        raise DomainError(f"lambda must be > 1, got {lam}")
    log_lam = math.log(lam)
    x = np.log(t) / log_lam
    nearest = np.round(x)
    on_boundary = np.abs(t - np.exp(nearest * log_lam)) <= snap * t
    n = np.where(on_boundary, nearest, np.floor(x)) + 1
    return n.astype(int)


def interval_index(t: float, lam: float) -> int:
    """The unique n with lam**(n-1) <= t < lam**n (left-closed)."""
    return int(interval_indices([t], lam)[0])


def _exponent_weights(H: float, alpha: float, size: int, start: int = 0) -> np.ndarray:
    return np.exp((start + np.arange(size)) * H * math.log(alpha))


def lamperti_forward(H: float, alpha: float, y, start: int = 0) -> np.ndarray:
    """x[n] = alpha**(n H) y[n]: the quasi-Lamperti transform sampled at t = alpha**n."""
    y = np.asarray(y, dtype=float)
    return _exponent_weights(H, alpha, y.size, start) * y


def lamperti_inverse(H: float, alpha: float, x, start: int = 0) -> np.ndarray:
    """y[n] = alpha**(-n H) x[n]."""
    x = np.asarray(x, dtype=float)
    return x / _exponent_weights(H, alpha, x.size, start)


# =============================================================================
# PATH CSV + JSON SIDECAR
# =============================================================================

def grid_from_description(desc: Dict) -> Grid:
    """Rebuild a grid from the sidecar's grid fields."""
    kind = desc.get('grid', 'geometric')
    if kind == 'geometric':
        return ScaleGrid(float(desc['alpha']), int(desc['T']), int(desc['M']),
                         float(desc.get('base', 1.0)))
    if kind == 'equispaced':
        return EquispacedScaleGrid(float(desc['lambda']), int(desc['T']), int(desc['M']))
    raise DomainError(f"unknown grid kind: {kind}")


def write_path(path: SampledPath, csv_file, extra: Optional[Dict] = None):
    """Write `k,t,x` rows plus the JSON sidecar; returns the sidecar path."""
    times = path.grid.times()
    rows = ((k, t, x) for k, (t, x) in enumerate(zip(times, path.values)))
    write_csv(csv_file, ['k', 't', 'x'], rows)

    sidecar = {
        'model': path.meta.get('model'),
        'seed': path.meta.get('seed'),
        'H': path.meta.get('H'),
        'alpha': getattr(path.grid, 'alpha', None),
        'T': path.grid.T,
        'M': path.grid.M,
    }
    sidecar.update(path.grid.describe())
    if extra:
        sidecar['effective'] = extra
    side = sidecar_path(csv_file)
    write_json(side, sidecar)
    logger.debug("wrote %d path rows to %s", len(times), csv_file)
    return side


def read_path(csv_file) -> SampledPath:
    """Load a path written by write_path."""
    side = sidecar_path(csv_file)
    if not side.exists():
        raise DomainError(f"missing JSON sidecar for {csv_file}")
    desc = read_json(side)
    grid = grid_from_description(desc)
    rows = read_csv(csv_file)
    values = [float(row['x']) for row in rows]
    meta = {key: desc.get(key) for key in ('model', 'seed', 'H')}
    return SampledPath(grid, values, meta)
