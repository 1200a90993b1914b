import json
import math

from xy_correlators import runner
from xy_correlators.config import RunConfig
from xy_correlators.runner import CorrelatorRunner


def run(tmp_path, **fields):
    return CorrelatorRunner(RunConfig(output_folder=str(tmp_path), threads=2, **fields)).run()


def test_spectrum_result(tmp_path):
    result = run(tmp_path, command='spectrum', n_sites=8, r=0.6, h=1.3)
    assert result['status'] == 'success'
    assert result['rows'] == 8
    assert [p.rsplit('/', 1)[-1] for p in result['outputs']] == ['spectrum.csv', 'spectrum_fit.json']


def test_tables_carry_convergence_metadata(tmp_path):
    run(tmp_path, command='toy', omega_values=(1.0,), beta_values=(0.5, 2.0))
    lines = (tmp_path / 'toy.csv').read_text().splitlines()
    assert '# converged=True' in lines
    assert any(line.startswith('# worst_est_error=') for line in lines)


def test_entropy_fit_summary(tmp_path):
    result = run(tmp_path, command='entropy', n_sites=64, r=1.0, h=3.0, block_lengths=(2, 4, 8),
                 output_format='json')
    assert result['converged']
    summary = json.loads((tmp_path / 'entropy_fit.json').read_text())['summary']
    assert summary['units'] == 'nats'
    assert abs(summary['slope']) < 1e-2


def test_sweep_rows_keep_input_order(tmp_path):
    run(tmp_path, command='static', n_sites=32, r=1.0, h=0.5, h_values=(0.3, 0.7), l_values=(2, 1))
    rows = [line.split(',')[:2] for line in (tmp_path / 'static.csv').read_text().splitlines()[1:]
            if not line.startswith('#')]
    assert rows == [['0.3', '2'], ['0.3', '1'], ['0.7', '2'], ['0.7', '1']]


def test_driven_summary_reports_ground_state_cutoff(tmp_path):
    result = run(tmp_path, command='driven', n_sites=8, r=1.0, omega_values=(0.5,), grid_points=128,
                 l_values=(1,), output_format='json')
    summary = json.loads((tmp_path / 'driven_fit.json').read_text())['summary']
    assert summary['beta_omega_0.5'] == 4.0
    assert 0.0 < summary['cutoff_error_omega_0.5'] < 1.0
    assert result['worst_est_error'] >= summary['cutoff_error_omega_0.5']


def test_unconverged_tables_are_still_written(tmp_path, monkeypatch):
    rows = [{'lambda': 1e-3, 'phi_h': 0.045, 'xi': 22.4, 't_star': math.nan, 'converged': False}]
    monkeypatch.setattr(runner, 'critical_exponents', lambda lambdas, tol: {
        'nu': 0.5, 'z': math.nan, 'nu_residual': 0.0, 'z_residual': math.nan, 'rows': rows,
        'converged': False})
    result = run(tmp_path, command='exponents', lambda_values=(1e-3, 1e-2))
    assert result['status'] == 'not_converged'
    lines = (tmp_path / 'exponents.csv').read_text().splitlines()
    assert '# converged=False' in lines
