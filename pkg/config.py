"""
Configuration settings for the DSIM toolkit
"""

# Sampling grid settings
GRID_CONFIG = {
    # Scale base; the preferred scale is lambda = alpha ** T
    'alpha': 1.05,

    # Samples per scale interval
    'T': 6,

    # Number of scale intervals
    'M': 500,

    # Start time of the lattice
    'base': 1.0,

    # Relative distance under which a time counts as sitting on a scale-interval boundary
    'boundary_snap': 1e-9,
}

# Simulation settings
SIM_CONFIG = {
    # PCAR/DSIAR burn-in, in whole periods (burn_in = periods * T)
    'burn_in_periods': 50,

    # Default drift for simple Brownian motion
    'drift': 'none',

    # Constant drift level used by drift='constant'
    'a': 1.0,
}

# Covariance algebra settings
COVARIANCE_CONFIG = {
    # Relative slack on (R_j(1))^2 <= R_j(0) R_{j+1}(0) so that equality survives rounding
    'admissible_rtol': 1e-12,
}

# Maximum likelihood settings
MLE_CONFIG = {
    # Search interval for H
    'h_range': (0.05, 1.2),

    # Optimizer tolerance on H
    'tol': 1e-4,

    # Model family: 'sbm' or 'sbm_random_drift'
    'family': 'sbm_random_drift',

    # Maximum number of subsampled points
    'cap': 300,

    # Geometric subsample density
    'points_per_scale': 6,

    # Diagonal jitter, relative to the mean variance, and how many times it may grow
    'jitter': 1e-10,
    'jitter_steps': 3,

    # Points in the reported log-likelihood profile
    'profile_points': 25,

    # Profiles with a smaller spread than this are reported as flat
    'flat_profile_tol': 1e-8,
}

# Spectral settings
SPECTRAL_CONFIG = {
    # Uniform omega grid size for exported density matrices
    'omega_points': 256,

    # Trapezoid points for the inversion check
    'quadrature_points': 4096,

    # Covariance dumps cover lattice indices 0 ... cov_periods * T
    'cov_periods': 4,
}

# Covariance verification run (geometric sampling of simple Brownian motion)
VERIFY_CONFIG = {
    'model': 'sbm',
    'drift': 'none',
    'H': 0.8,
    'alpha': 1.05,
    'T': 6,
    'M': 500,
    'n': 9,
    'tau': 20,
    'reps': 1,
}

# Hurst estimation run (equispaced-in-scale sampling)
HURST_CONFIG = {
    'model': 'sbm',
    'drift': 'random',
    'H': 0.8,
    'lambda': 1.2,
    'T': 200,
    'M': 30,
}

# MAE benchmark settings
BENCH_CONFIG = {
    'h_values': [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
    'reps': 30,
    'M': 30,
    'T': 200,
    'lambda': 1.2,

    # 1 runs replicates in-process
    'workers': 1,

    'mle': True,
}

# Output settings
OUTPUT_CONFIG = {
    # Significant digits for every number written to CSV/JSON
    'precision': 12,

    # Directory used when --out is not given
    'out_dir': 'output',
}

# Moment estimator settings
ESTIMATOR_CONFIG = {
    # An estimated variance below (rtol * rms)^2 of the normalized samples counts as zero
    'degenerate_rtol': 1e-10,
}
