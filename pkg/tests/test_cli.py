import json

import pytest

from pytest import approx
from pytest import mark

from exports import read_csv, write_json
from main import main
from scale_grid import write_path

from .strategies import exact_dsi_path


def _lines(path):
    return path.read_text(encoding='utf-8').splitlines()


def test_simulate_writes_path_and_sidecar(tmp_path):
    out = tmp_path / 'sin.csv'
    code = main(['simulate', '--model', 'sbm', '--drift', 'sin', '--H', '0.3', '--lambda', '1.2',
                 '--grid', 'geometric', '--T', '6', '--M', '100', '--seed', '7', '--out', str(out)])
    assert code == 0
    assert len(_lines(out)) == 602
    sidecar = json.loads(out.with_suffix('.json').read_text(encoding='utf-8'))
    assert sidecar['seed'] == 7
    assert sidecar['lambda'] == approx(1.2)
    assert sidecar['effective']['drift'] == 'sin'


def test_simulate_verification_setup_size(tmp_path):
    out = tmp_path / 'p.csv'
    assert main(['simulate', '--H', '0.8', '--alpha', '1.05', '--T', '6', '--M', '500',
                 '--seed', '1', '--out', str(out)]) == 0
    assert len(_lines(out)) == 3002


def test_simulate_is_byte_identical_across_runs(tmp_path):
    out = tmp_path / 'p.csv'
    argv = ['simulate', '--H', '0.6', '--drift', 'random', '--grid', 'equispaced', '--lambda', '1.5',
            '--T', '10', '--M', '8', '--seed', '3', '--out', str(out)]
    assert main(argv) == 0
    first = out.read_bytes(), out.with_suffix('.json').read_bytes()
    assert main(argv) == 0
    assert (out.read_bytes(), out.with_suffix('.json').read_bytes()) == first


def test_config_file_sits_between_defaults_and_flags(tmp_path):
    config = tmp_path / 'run.json'
    write_json(config, {'H': 0.4, 'M': 50})
    out = tmp_path / 'p.csv'
    assert main(['simulate', '--config', str(config), '--M', '20', '--seed', '2', '--out', str(out)]) == 0
    assert len(_lines(out)) == 20 * 6 + 2
    assert json.loads(out.with_suffix('.json').read_text(encoding='utf-8'))['H'] == approx(0.4)


def test_simulate_dsiar_from_spec(tmp_path):
    spec = tmp_path / 'dsiar.json'
    write_json(spec, {'type': 'dsiar', 'H': 0.5, 'alpha': 1.2, 'theta': [[0.5, -0.6]], 'sigma': [1.0, 1.0]})
    out = tmp_path / 'd.csv'
    assert main(['simulate', '--model', str(spec), '--M', '10', '--seed', '4', '--out', str(out)]) == 0
    assert len(_lines(out)) == 10 * 2 + 2


def test_missing_seed_is_usage_error(tmp_path, capsys):
    assert main(['simulate', '--H', '0.5', '--out', str(tmp_path / 'x.csv')]) == 2
    assert 'seed' in capsys.readouterr().err


def test_noncausal_model_exits_with_domain_code(tmp_path):
    spec = tmp_path / 'bad.json'
    write_json(spec, {'type': 'dsiar', 'H': 0.1, 'alpha': 1.05, 'theta': [[3.0, 2.0]]})
    assert main(['simulate', '--model', str(spec), '--M', '5', '--seed', '1',
                 '--out', str(tmp_path / 'x.csv')]) == 3


def test_unknown_drift_exits_with_domain_code(tmp_path):
    assert main(['simulate', '--H', '0.5', '--drift', 'wobbly', '--seed', '1',
                 '--out', str(tmp_path / 'x.csv')]) == 3


def test_verify_cov_report(tmp_path):
    out = tmp_path / 'verify.json'
    assert main(['verify-cov', '--seed', '5', '--out', str(out)]) == 0
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['n'] == 9 and report['tau'] == 20
    assert report['analytic'] == approx(2.8687, abs=1e-4)
    assert set(report['rel_gaps']) == {'lhs_rhs', 'lhs_analytic', 'rhs_analytic'}
    assert report['effective']['M'] == 500


def test_verify_cov_lag_from_periods(tmp_path):
    out = tmp_path / 'verify.json'
    assert main(['verify-cov', '--seed', '5', '--M', '60', '--k', '3', '--nu', '2',
                 '--reps', '3', '--out', str(out)]) == 0
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['tau'] == 20
    assert len(report['runs']) == 3
    assert set(report['median_rel_gaps']) == {'lhs_rhs', 'lhs_analytic', 'rhs_analytic'}


def test_verify_cov_rejects_deterministic_path(tmp_path, capsys):
    path_file = tmp_path / 'dsi.csv'
    write_path(exact_dsi_path(0.8, 1.05, 6, 20), path_file)
    assert main(['verify-cov', '--from-path', str(path_file), '--H', '0.8',
                 '--out', str(tmp_path / 'v.json')]) == 3
    assert 'zero variance' in capsys.readouterr().err


def test_estimate_hurst_on_simulated_motion(tmp_path):
    out = tmp_path / 'hurst.json'
    assert main(['estimate-hurst', '--seed', '3', '--mle', '--out', str(out)]) == 0
    report = json.loads(out.read_text(encoding='utf-8'))
    assert abs(report['h1'] - 0.8) < 0.1
    assert len(report['mu1']) == 29
    assert 'h_mle' in report and 'profile' in report


def test_estimate_hurst_needs_equispaced_path(tmp_path):
    path_file = tmp_path / 'geo.csv'
    assert main(['simulate', '--H', '0.5', '--M', '10', '--seed', '1', '--out', str(path_file)]) == 0
    assert main(['estimate-hurst', '--from-path', str(path_file), '--out', str(tmp_path / 'h.json')]) == 3


def test_spectral_of_sbm_table(tmp_path):
    out = tmp_path / 'spec.csv'
    q_out = tmp_path / 'q.csv'
    assert main(['spectral', '--out', str(out), '--q-out', str(q_out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 256 * 36
    first = rows[0]
    assert (first['omega'], first['j'], first['r']) == ('0', '0', '0')
    assert float(first['re']) == approx(2.597, abs=1e-3)
    assert len(read_csv(q_out)) == 7 * 36


def test_spectral_from_dsiar_model(tmp_path):
    spec = tmp_path / 'dsiar.json'
    write_json(spec, {'type': 'dsiar', 'H': 0.5, 'alpha': 1.2, 'theta': [[0.5, -0.6, 0.9]]})
    out = tmp_path / 's.csv'
    assert main(['spectral', '--model', str(spec), '--omega-points', '8', '--out', str(out)]) == 0
    assert len(read_csv(out)) == 8 * 9


def test_spectral_from_estimated_table(tmp_path):
    path_file = tmp_path / 'p.csv'
    assert main(['simulate', '--H', '0.8', '--M', '200', '--seed', '9', '--out', str(path_file)]) == 0
    out = tmp_path / 's.csv'
    code = main(['spectral', '--from-path', str(path_file), '--omega-points', '4', '--out', str(out)])
    assert code == 0
    assert len(read_csv(out)) == 4 * 36


def test_spectral_rejects_inadmissible_table(tmp_path, capsys):
    table = tmp_path / 'table.json'
    write_json(table, {'H': 0.5, 'alpha': 1.2, 'T': 2, 'r0': [1.0, 2.0], 'r1': [5.0, 1.0]})
    assert main(['spectral', '--table', str(table), '--out', str(tmp_path / 's.csv')]) == 3
    assert 'j = [0]' in capsys.readouterr().err


def test_mae_bench_small_sweep(tmp_path):
    out = tmp_path / 'mae.csv'
    assert main(['mae-bench', '--seed', '1', '--h-values', '0.5', '--reps', '2', '--M', '5',
                 '--T', '20', '--no-mle', '--out', str(out)]) == 0
    assert len(read_csv(out)) == 2
    assert len(read_csv(tmp_path / 'mae_plot.csv')) == 4


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    assert 'simulate' in capsys.readouterr().out


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        main(['simulate', '--T', 'six'])
    assert info.value.code == 2


def _dsiar_spec(tmp_path):
    spec = tmp_path / 'dsiar.json'
    write_json(spec, {'type': 'dsiar', 'H': 0.5, 'alpha': 1.2, 'theta': [[0.5, -0.6]], 'sigma': [1.0, 1.0]})
    return spec


def test_verify_cov_simulates_dsiar_models(tmp_path):
    out = tmp_path / 'verify.json'
    assert main(['verify-cov', '--model', str(_dsiar_spec(tmp_path)), '--seed', '1', '--M', '40',
                 '--out', str(out)]) == 0
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['H_used'] == approx(0.5)
    assert report['analytic'] is not None
    assert set(report['rel_gaps']) == {'lhs_rhs', 'lhs_analytic', 'rhs_analytic'}


def test_verify_cov_rejects_pcar_models(tmp_path, capsys):
    spec = tmp_path / 'pcar.json'
    write_json(spec, {'type': 'pcar', 'phi': [[0.5, 0.5]]})
    assert main(['verify-cov', '--model', str(spec), '--seed', '1',
                 '--out', str(tmp_path / 'v.json')]) == 2
    assert 'PcarModel' in capsys.readouterr().err


def test_estimate_hurst_simulates_sbm_only(tmp_path, capsys):
    assert main(['estimate-hurst', '--model', str(_dsiar_spec(tmp_path)), '--seed', '1',
                 '--out', str(tmp_path / 'h.json')]) == 2
    assert 'sbm only' in capsys.readouterr().err


def test_spectral_writes_covariance_dump(tmp_path):
    cov_out = tmp_path / 'cov.csv'
    assert main(['spectral', '--omega-points', '2', '--cov-out', str(cov_out), '--cov-periods', '2',
                 '--out', str(tmp_path / 's.csv')]) == 0
    rows = read_csv(cov_out)
    assert list(rows[0]) == ['n', 'tau', 'value']
    assert len(rows) == 13 * 14 // 2
    assert float(rows[0]['value']) == approx(1.19201, abs=1e-5)
    assert {(row['n'], row['tau']) for row in rows} >= {('0', '12'), ('12', '0')}


@mark.slow
def test_verify_cov_median_gap_over_twenty_seeds(tmp_path):
    out = tmp_path / 'verify.json'
    assert main(['verify-cov', '--seed', '0', '--reps', '20', '--out', str(out)]) == 0
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['median_rel_gaps']['lhs_rhs'] < 0.10
