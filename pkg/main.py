"""
DSIM Toolkit
Main entry point: simulate discrete scale invariant Markov sequences, verify the
covariance characterization on simulated data, estimate the Hurst index,
export spectral density matrices and run the MAE benchmark.

Usage:
    python main.py simulate --model sbm --drift sin --H 0.3 --lambda 1.2 --T 6 --M 100 --seed 7
    python main.py verify-cov --seed 1 --reps 20
    python main.py estimate-hurst --seed 3 --mle
    python main.py spectral --model sbm --H 0.8 --alpha 1.05 --T 6
    python main.py mae-bench --seed 1 --workers 4
"""

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from config import (BENCH_CONFIG, GRID_CONFIG, HURST_CONFIG, OUTPUT_CONFIG, SIM_CONFIG,
                    SPECTRAL_CONFIG, VERIFY_CONFIG)
from covariance_core import (SeasonalCovariance, admissible, covariance_dsim, dsiar1_seasonal,
                             sbm_cov, sbm_seasonal, write_covariance_csv)
from errors import DsimError, PreconditionError, UsageError
from estimators import estimate_r_n_tau, estimate_seasonal, hurst_mle, hurst_variation
from exports import read_json, sidecar_path, write_csv, write_json
from mae_bench import BenchRunner, default_spec
from process_sim import (DsiarModel, PcarModel, SbmModel, model_from_spec, model_to_spec,
                         simulate_dsiar, simulate_pcar, simulate_sbm)
from scale_grid import EquispacedScaleGrid, ScaleGrid, read_path, write_path
from spectral import SpectralDensityMatrix, omega_grid, q_matrix, write_q_csv, write_spectral_csv

logger = logging.getLogger(__name__)


# =============================================================================
# RUN CONFIGURATION
# =============================================================================

@dataclass
class RunConfig:
    """Effective parameters of one command: defaults < --config JSON < flags."""
    command: str
    model: str = 'sbm'
    drift: str = SIM_CONFIG['drift']
    H: Optional[float] = None
    alpha: Optional[float] = None
    T: Optional[int] = None
    M: Optional[int] = None
    lam: Optional[float] = None
    a: float = SIM_CONFIG['a']
    seed: Optional[int] = None
    reps: int = 1
    grid: str = 'geometric'
    burn_in: Optional[int] = None
    n: Optional[int] = None
    tau: Optional[int] = None
    k: Optional[int] = None
    nu: Optional[int] = None
    mle: bool = False
    from_path: Optional[str] = None
    table: Optional[str] = None
    omega_points: int = SPECTRAL_CONFIG['omega_points']
    q_out: Optional[str] = None
    q_lags: int = 3
    cov_out: Optional[str] = None
    cov_periods: int = SPECTRAL_CONFIG['cov_periods']
    h_values: Optional[List[float]] = None
    workers: int = 1
    out: Optional[str] = None
    model_spec: Optional[Dict] = None

    @classmethod
    def from_dict(cls, command: str, values: Dict) -> 'RunConfig':
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(command=command, **{k: v for k, v in values.items() if k != 'command'})

    def effective(self) -> Dict:
        return asdict(self)

    def require_seed(self) -> int:
        if self.seed is None:
            raise UsageError(f"{self.command} needs --seed")
        return int(self.seed)

    def require_H(self) -> float:
        if self.H is None:
            raise UsageError(f"{self.command} needs --H")
        return float(self.H)

    def out_file(self, default_name: str) -> Path:
        return Path(self.out) if self.out else Path(OUTPUT_CONFIG['out_dir']) / default_name


def _renamed(values: Dict) -> Dict:
    """Config dicts spell lambda out; RunConfig calls it lam."""
    values = dict(values)
    if 'lambda' in values:
        values['lam'] = values.pop('lambda')
    return values


COMMAND_DEFAULTS = {
    'simulate': {'T': GRID_CONFIG['T'], 'M': GRID_CONFIG['M']},
    'verify-cov': _renamed(VERIFY_CONFIG),
    'estimate-hurst': _renamed(HURST_CONFIG),
    'spectral': {'H': VERIFY_CONFIG['H'], 'alpha': VERIFY_CONFIG['alpha'], 'T': VERIFY_CONFIG['T']},
    'mae-bench': {'M': BENCH_CONFIG['M'], 'T': BENCH_CONFIG['T'], 'lam': BENCH_CONFIG['lambda'],
                  'reps': BENCH_CONFIG['reps'], 'workers': BENCH_CONFIG['workers'],
                  'mle': BENCH_CONFIG['mle'], 'h_values': list(BENCH_CONFIG['h_values'])},
}

NON_CONFIG_ARGS = ('command', 'config', 'verbose')


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge command defaults, the optional JSON config file, then explicit flags."""
    merged = dict(COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        from_file = read_json(args.config)
        if not isinstance(from_file, dict):
            raise UsageError(f"{args.config} must hold a JSON object")
        merged.update(_renamed(from_file))
    merged.update({k: v for k, v in vars(args).items() if v is not None and k not in NON_CONFIG_ARGS})
    return RunConfig.from_dict(args.command, merged)


# =============================================================================
# SHARED HELPERS
# =============================================================================

def _alpha_and_lambda(config: RunConfig):
    """Fill in whichever of alpha, lambda is missing (lambda = alpha ** T)."""
    T = int(config.T)
    if config.alpha is None and config.lam is None:
        return GRID_CONFIG['alpha'], GRID_CONFIG['alpha'] ** T
    if config.alpha is None:
        return float(config.lam) ** (1.0 / T), float(config.lam)
    return float(config.alpha), float(config.alpha) ** T


def _build_grid(config: RunConfig):
    alpha, lam = _alpha_and_lambda(config)
    if config.grid == 'geometric':
        return ScaleGrid(alpha, int(config.T), int(config.M), GRID_CONFIG['base'])
    if config.grid == 'equispaced':
        return EquispacedScaleGrid(lam, int(config.T), int(config.M))
    raise UsageError(f"unknown grid: {config.grid}")


def _model_spec(config: RunConfig) -> Optional[Dict]:
    """Model spec from a JSON path given as --model, or inline in the config file."""
    if config.model.endswith('.json'):
        return read_json(config.model)
    return config.model_spec


def _build_model(config: RunConfig):
    spec = _model_spec(config)
    if spec is not None:
        return model_from_spec(spec)
    if config.model != 'sbm':
        raise UsageError(f"--model {config.model} needs a model-spec JSON (theta, sigma)")
    _, lam = _alpha_and_lambda(config)
    return SbmModel(config.require_H(), lam, config.drift, float(config.a))


def _write_report(filepath: Path, report: Dict, config: RunConfig):
    report = dict(report)
    report['effective'] = config.effective()
    write_json(filepath, report)


def print_banner(title: str):
    print("=" * 80)
    print(title)
    print("=" * 80)


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_simulate(config: RunConfig) -> Path:
    """Simulate one path and write the `k,t,x` CSV plus its JSON sidecar."""
    seed = config.require_seed()
    model = _build_model(config)
    out = config.out_file('path.csv')
    print_banner("SIMULATE")

    if isinstance(model, SbmModel):
        grid = _build_grid(config)
        path = simulate_sbm(model, grid, seed)
    elif isinstance(model, DsiarModel):
        # the lattice follows the model's own alpha and period
        grid = ScaleGrid(model.alpha, model.T, int(config.M), GRID_CONFIG['base'])
        path = simulate_dsiar(model, grid, seed, config.burn_in)
    elif isinstance(model, PcarModel):
        values = simulate_pcar(model, int(config.M) * model.T + 1, seed, config.burn_in)
        write_csv(out, ['k', 't', 'x'], ((k, k, x) for k, x in enumerate(values)))
        write_json(sidecar_path(out), {'model': 'pcar', 'seed': seed, 'grid': 'index', 'T': model.T,
                                       'M': int(config.M), 'effective': config.effective()})
        print(f"  PCAR({model.p}) T={model.T}: {values.size} points -> {out}")
        return out
    else:
        raise UsageError(f"cannot simulate {type(model).__name__}")

    effective = config.effective()
    effective['model_spec'] = model_to_spec(model)
    write_path(path, out, effective)
    print(f"  Model: {path.meta['model']}  H={path.meta['H']}  seed={seed}")
    print(f"  Grid: {path.grid.describe()['grid']}  T={path.grid.T}  M={path.grid.M}")
    print(f"  Wrote {path.values.size} points -> {out}")
    return out


def _simulate_geometric(model, config: RunConfig, seed: int):
    """One path on the model's geometric lattice; PCAR sequences have none."""
    if isinstance(model, SbmModel):
        alpha = _alpha_and_lambda(config)[0]
        return simulate_sbm(model, ScaleGrid(alpha, int(config.T), int(config.M)), seed)
    if isinstance(model, DsiarModel):
        grid = ScaleGrid(model.alpha, model.T, int(config.M), GRID_CONFIG['base'])
        return simulate_dsiar(model, grid, seed, config.burn_in)
    raise UsageError(f"{config.command} needs an sbm or dsiar model, got {type(model).__name__}")


def _analytic(model, path, n: int, tau: int) -> Optional[float]:
    """Exact R_n(tau) of the generating model, when one is known."""
    if isinstance(model, SbmModel) and isinstance(path.grid, ScaleGrid):
        times = path.grid.times()
        return sbm_cov(model, times[n + tau], times[n])
    if isinstance(model, DsiarModel) and model.p == 1:
        return covariance_dsim(dsiar1_seasonal(model), n, tau)
    return None


def _verify_one(path, model, n: int, tau: int, H: float) -> Dict:
    lhs = estimate_r_n_tau(path, H, n, tau)
    table = estimate_seasonal(path, H)
    rhs = covariance_dsim(table, n, tau)
    analytic = _analytic(model, path, n, tau)
    scale = abs(analytic) if analytic else abs(rhs)
    gaps = {'lhs_rhs': abs(lhs - rhs) / scale}
    if analytic:
        gaps['lhs_analytic'] = abs(lhs - analytic) / scale
        gaps['rhs_analytic'] = abs(rhs - analytic) / scale
    return {'lhs': lhs, 'rhs': rhs, 'analytic': analytic, 'rel_gaps': gaps}


def cmd_verify_cov(config: RunConfig) -> Dict:
    """
    Compare the direct estimate of R_n(tau) with the value rebuilt from the
    estimated seasonal table, and both with the closed form.
    """
    print_banner("VERIFY COVARIANCE CHARACTERIZATION")
    if config.from_path:
        paths = [read_path(config.from_path)]
        H = config.require_H()
        model = None
        if config.model == 'sbm' and isinstance(paths[0].grid, ScaleGrid):
            model = SbmModel(H, paths[0].grid.lam, config.drift, float(config.a))
    else:
        seed = config.require_seed()
        model = _build_model(config)
        H = model.H if isinstance(model, DsiarModel) else config.require_H()
        paths = [_simulate_geometric(model, config, seed + i) for i in range(int(config.reps))]

    T = paths[0].grid.T
    tau = int(config.k) * T + int(config.nu or 0) if config.k is not None else int(config.tau)
    n = int(config.n)
    runs = [_verify_one(path, model, n, tau, H) for path in paths]
    for i, run in enumerate(runs):
        analytic = 'n/a' if run['analytic'] is None else f"{run['analytic']:.4f}"
        print(f"  [{i + 1}/{len(runs)}] lhs={run['lhs']:.4f}  rhs={run['rhs']:.4f}  analytic={analytic}")

    report = {'n': n, 'tau': tau, 'H_used': H}
    if len(runs) == 1:
        report.update(runs[0])
    else:
        report['runs'] = runs
        report['median_rel_gaps'] = {key: float(np.median([r['rel_gaps'][key] for r in runs]))
                                     for key in runs[0]['rel_gaps']}
        for key in ('lhs', 'rhs'):
            report[key] = float(np.median([r[key] for r in runs]))
        report['analytic'] = runs[0]['analytic']
    out = config.out_file('verify_cov.json')
    _write_report(out, report, config)
    print(f"  Report -> {out}")
    return report


def cmd_estimate_hurst(config: RunConfig) -> Dict:
    """Variation-ratio estimates (and optionally the MLE) of H."""
    print_banner("ESTIMATE HURST INDEX")
    if config.from_path:
        path = read_path(config.from_path)
    else:
        seed = config.require_seed()
        model = _build_model(config)
        if not isinstance(model, SbmModel):
            raise UsageError("estimate-hurst simulates sbm only; pass --from-path for other data")
        grid = EquispacedScaleGrid(model.lam, int(config.T), int(config.M))
        path = simulate_sbm(model, grid, seed)

    estimate = hurst_variation(path)
    report = estimate.to_dict()
    print(f"  H1 (first-order variation):  {estimate.h1:.4f}")
    print(f"  H2 (second-order variation): {estimate.h2:.4f}")
    if config.mle:
        mle = hurst_mle(path)
        report.update(mle.to_dict())
        print(f"  H (maximum likelihood):      {mle.h:.4f}  ({mle.n_points} points)")
    out = config.out_file('hurst.json')
    _write_report(out, report, config)
    print(f"  Report -> {out}")
    return report


def _spectral_table(config: RunConfig) -> SeasonalCovariance:
    if config.table:
        return SeasonalCovariance.from_dict(read_json(config.table))
    if config.from_path:
        path = read_path(config.from_path)
        H = config.H if config.H is not None else path.H
        if H is None:
            raise UsageError("spectral --from-path needs --H when the sidecar has none")
        return estimate_seasonal(path, float(H))
    model = _build_model(config) if config.model != 'sbm' or _model_spec(config) else None
    if isinstance(model, DsiarModel):
        return dsiar1_seasonal(model)
    if model is not None:
        raise UsageError("spectral supports --model sbm or a DSIAR(1) spec")
    return sbm_seasonal(config.require_H(), _alpha_and_lambda(config)[0], int(config.T))


def cmd_spectral(config: RunConfig) -> Path:
    """Spectral density matrix on a uniform omega grid, with optional Q matrices."""
    print_banner("SPECTRAL DENSITY MATRIX")
    table = _spectral_table(config)
    report = admissible(table)
    if not report.ok:
        raise PreconditionError(
            f"covariance table is not admissible at j = {report.violations}", diagnostic=report.violations)
    density = SpectralDensityMatrix(table)
    omegas = omega_grid(int(config.omega_points))
    out = config.out_file('spectral.csv')
    rows = write_spectral_csv(out, density, omegas)
    write_json(sidecar_path(out), {'table': table.to_dict(), 'rho': density.rho,
                                   'margins': report.margins, 'effective': config.effective()})
    print(f"  T={table.T}  rho={density.rho:.6f}  omega points={omegas.size}")
    print(f"  Wrote {rows} rows -> {out}")

    if config.q_out:
        lags = range(-int(config.q_lags), int(config.q_lags) + 1)
        count = write_q_csv(config.q_out, [q_matrix(table, 0, tau) for tau in lags])
        print(f"  Wrote {count} Q-matrix rows -> {config.q_out}")

    if config.cov_out:
        indices = range(int(config.cov_periods) * table.T + 1)
        count = write_covariance_csv(config.cov_out, table, indices)
        print(f"  Wrote {count} covariance rows -> {config.cov_out}")
    return out


def cmd_mae_bench(config: RunConfig) -> Path:
    """Run the MAE sweep and write the table plus the long-format plot data."""
    spec = default_spec(config.require_seed(), h_values=config.h_values, reps=int(config.reps),
                        M=int(config.M), T=int(config.T), lam=float(config.lam),
                        workers=int(config.workers), mle=bool(config.mle))
    runner = BenchRunner(spec)
    runner.run()
    out = config.out_file('mae_bench.csv')
    plot_file = out.with_name(out.stem + '_plot.csv')
    runner.write(out, plot_file)
    write_json(sidecar_path(out), {'plot_file': plot_file.name, 'effective': config.effective()})
    runner.print_summary()
    print(f"  Table -> {out}")
    print(f"  Plot data -> {plot_file}")
    return out


COMMANDS = {
    'simulate': cmd_simulate,
    'verify-cov': cmd_verify_cov,
    'estimate-hurst': cmd_estimate_hurst,
    'spectral': cmd_spectral,
    'mae-bench': cmd_mae_bench,
}


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON file with parameter overrides')
    common.add_argument('--seed', type=int, help='Random seed (required for stochastic runs)')
    common.add_argument('--out', help='Output file')
    common.add_argument('--verbose', '-v', action='store_true', default=None, help='Debug logging')

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument('--model', help='sbm | dsiar | pcar, or a model-spec JSON path')
    model.add_argument('--drift', help='none | constant | sin | random')
    model.add_argument('--a', type=float, help='Constant drift level')
    model.add_argument('--H', type=float, help='Hurst index')
    model.add_argument('--alpha', type=float, help='Scale base (lambda = alpha ** T)')
    model.add_argument('--lambda', dest='lam', type=float, help='Preferred scale')
    model.add_argument('--T', type=int, help='Samples per scale interval')
    model.add_argument('--M', type=int, help='Number of scale intervals')

    parser = argparse.ArgumentParser(
        description='Discrete scale invariant Markov sequences - simulation, covariance, estimation',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
Examples:
  python main.py simulate --model sbm --drift sin --H 0.3 --lambda 1.2 --T 6 --M 100 --seed 7
  python main.py simulate --model dsiar_model.json --M 200 --seed 2
  python main.py verify-cov --seed 1 --reps 20        # covariance characterization check
  python main.py estimate-hurst --seed 3 --mle        # H1, H2 and maximum likelihood
  python main.py spectral --model sbm --q-out q.csv --cov-out cov.csv  # density, Q matrices, R_n(tau)
  python main.py mae-bench --seed 1 --workers 4       # MAE table and plot data
        '''
    )
    subparsers = parser.add_subparsers(dest='command')

    sim = subparsers.add_parser('simulate', parents=[common, model], help='Simulate a sampled path')
    sim.add_argument('--grid', choices=['geometric', 'equispaced'], help='Sampling lattice')
    sim.add_argument('--burn-in', dest='burn_in', type=int, help='PCAR/DSIAR burn-in steps')

    verify = subparsers.add_parser('verify-cov', parents=[common, model],
                                   help='Check the covariance characterization on data')
    verify.add_argument('--n', type=int, help='Start index n')
    verify.add_argument('--tau', type=int, help='Lag tau')
    verify.add_argument('--k', type=int, help='Whole periods in the lag (tau = k T + nu)')
    verify.add_argument('--nu', type=int, help='Remainder of the lag')
    verify.add_argument('--reps', type=int, help='Seeds seed ... seed+reps-1')
    verify.add_argument('--from-path', dest='from_path', help='Use a path CSV instead of simulating')

    hurst = subparsers.add_parser('estimate-hurst', parents=[common, model], help='Estimate the Hurst index')
    hurst.add_argument('--mle', action='store_true', default=None, help='Add the maximum likelihood estimate')
    hurst.add_argument('--from-path', dest='from_path', help='Use a path CSV instead of simulating')

    spec = subparsers.add_parser('spectral', parents=[common, model], help='Export the spectral density matrix')
    spec.add_argument('--table', help='SeasonalCovariance JSON')
    spec.add_argument('--from-path', dest='from_path', help='Estimate the table from a path CSV')
    spec.add_argument('--omega-points', dest='omega_points', type=int, help='Omega grid size')
    spec.add_argument('--q-out', dest='q_out', help='Also write Q(0, tau) matrices here')
    spec.add_argument('--q-lags', dest='q_lags', type=int, help='Q matrices for tau in -q ... q')
    spec.add_argument('--cov-out', dest='cov_out', help='Also write R_n(tau) as n,tau,value rows here')
    spec.add_argument('--cov-periods', dest='cov_periods', type=int, help='Covariance dump over indices 0 ... periods*T')

    bench = subparsers.add_parser('mae-bench', parents=[common, model], help='Run the MAE benchmark')
    bench.add_argument('--reps', type=int, help='Replicates per H')
    bench.add_argument('--h-values', dest='h_values', type=_float_list, help='Comma-separated H sweep')
    bench.add_argument('--workers', type=int, help='Worker processes')
    bench.add_argument('--no-mle', dest='mle', action='store_false', default=None,
                       help='Skip the maximum likelihood baseline')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, run one command, map toolkit errors to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 2

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        config = build_config(args)
        COMMANDS[args.command](config)
    except DsimError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except (KeyError, TypeError) as e:
        print(f"Error: bad model or config value: {e}", file=sys.stderr)
        return UsageError.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
