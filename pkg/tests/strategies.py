"""Shared generators for covariance tables, models and synthetic paths."""

import numpy as np

from hypothesis.strategies import composite
from hypothesis.strategies import floats
from hypothesis.strategies import integers
from hypothesis.strategies import lists
from hypothesis.strategies import booleans

from covariance_core import SeasonalCovariance
from process_sim import DsiarModel
from scale_grid import EquispacedScaleGrid, SampledPath, ScaleGrid


def table_from_correlations(H, alpha, r0, s):
    """r1[j] = s[j] sqrt(r0[j] r0[j+1]); admissible iff every |s[j]| <= 1, and rho = prod(s)."""
    r0 = np.asarray(r0, dtype=float)
    following = np.append(r0[1:], alpha ** (2 * len(r0) * H) * r0[0])
    r1 = np.asarray(s, dtype=float) * np.sqrt(r0 * following)
    return SeasonalCovariance(H, alpha, len(r0), r0, r1)


def random_admissible_table(rng, T=None, max_corr=0.9):
    T = T or int(rng.integers(1, 7))
    H = rng.uniform(0.1, 1.0)
    alpha = rng.uniform(1.01, 1.3)
    r0 = rng.uniform(0.5, 3.0, T)
    s = rng.uniform(0.2, max_corr, T) * rng.choice([-1.0, 1.0], T)
    return table_from_correlations(H, alpha, r0, s)


@composite
def admissible_tables(draw, max_T=6):
    T = draw(integers(1, max_T))
    H = draw(floats(0.1, 1.0))
    alpha = draw(floats(1.01, 1.3))
    r0 = draw(lists(floats(0.5, 3.0), min_size=T, max_size=T))
    s = draw(lists(floats(0.2, 0.9), min_size=T, max_size=T))
    signs = draw(lists(booleans(), min_size=T, max_size=T))
    s = [-v if neg else v for v, neg in zip(s, signs)]
    return table_from_correlations(H, alpha, r0, s)


def random_causal_dsiar1(rng, T=None):
    """|theta| <= 1 with alpha, H > 0 keeps |prod phi| < 1."""
    T = T or int(rng.integers(1, 7))
    theta = rng.uniform(0.3, 1.0, T) * rng.choice([-1.0, 1.0], T)
    return DsiarModel(rng.uniform(0.2, 1.0), rng.uniform(1.05, 1.5), [theta], rng.uniform(0.5, 2.0, T))


def exact_dsi_path(H, alpha, T, M, levels=None):
    """Deterministic X(alpha^(kT+j)) = lambda^(kH) c_j on a geometric grid."""
    grid = ScaleGrid(alpha, T, M)
    levels = np.arange(1.0, T + 1.0) if levels is None else np.asarray(levels, dtype=float)
    k, j = np.divmod(np.arange(grid.size), T)
    values = grid.lam ** (k * H) * levels[j]
    return SampledPath(grid, values, {'model': 'dsi', 'H': H})


def self_similar_path(H, lam, T, M):
    """x(lambda^i t_k) = lambda^(iH) x(t_k) exactly, non-linear within each interval."""
    grid = EquispacedScaleGrid(lam, T, M)
    base = np.sin(np.arange(T)) + 2.0
    table = (lam ** (H * np.arange(M)))[:, None] * base[None, :]
    return SampledPath(grid, table.ravel(), {'model': 'self-similar', 'H': H})
