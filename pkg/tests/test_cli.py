import json

import pytest
from click.testing import CliRunner

from main import EXIT_CONFIG, EXIT_OK, cli


@pytest.fixture
def invoke(tmp_path):
    runner = CliRunner()

    def run(*args):
        return runner.invoke(cli, [*args, '--output', str(tmp_path)])
    return run


def test_spectrum_writes_table(invoke, tmp_path):
    result = invoke('spectrum', '--n', '16', '--r', '1', '--h', '0.5')
    assert result.exit_code == EXIT_OK, result.output
    lines = (tmp_path / 'spectrum.csv').read_text().splitlines()
    assert lines[0] == 'm,phi,k,l,eps,theta,two_theta'
    assert len([line for line in lines if not line.startswith('#')]) == 17
    assert '# n_sites=16' in lines
    assert (tmp_path / 'spectrum_fit.json').exists()
    assert 'converged' in result.output


def test_static_range_expansion(invoke, tmp_path):
    result = invoke('static', '--h', '0.5', '--r', '1', '--n', '512', '--l', '1..4')
    assert result.exit_code == EXIT_OK, result.output
    rows = [line for line in (tmp_path / 'static.csv').read_text().splitlines() if not line.startswith('#')]
    assert [row.split(',')[1] for row in rows[1:]] == ['1', '2', '3', '4']


def test_kz_without_rates_is_a_config_error(invoke):
    result = invoke('kz')
    assert result.exit_code == EXIT_CONFIG
    assert 'omega_values' in result.output


@pytest.mark.parametrize("args", [('spectrum', '--n', '15'), ('spectrum', '--tol', '-1'),
                                  ('static', '--l', 'one'), ('driven', '--grid-points', '30')])
def test_bad_values_exit_with_config_code(invoke, args):
    assert invoke(*args).exit_code == EXIT_CONFIG


def test_unknown_run_file_key(invoke, run_file):
    assert invoke('spectrum', '--config', run_file("colour=blue\n")).exit_code == EXIT_CONFIG


def test_toy_json_output(invoke, tmp_path):
    result = invoke('toy', '--omega', '0.5,2', '--beta-values', '1,4', '--format', 'json')
    assert result.exit_code == EXIT_OK, result.output
    document = json.loads((tmp_path / 'toy.json').read_text())
    assert len(document['rows']) == 4
    diff = document['columns'].index('diff')
    assert max(row[diff] for row in document['rows']) < 1e-9


def test_prescription_demo(invoke, tmp_path):
    result = invoke('prescription-demo', '--omega', '0.5,1', '--beta-values', '2')
    assert result.exit_code == EXIT_OK, result.output
    assert (tmp_path / 'prescription_demo.csv').exists()


def test_oracle_compare_small_chain(invoke, tmp_path):
    result = invoke('oracle-compare', '--n', '8', '--r', '0.6', '--h', '1.3', '--l', '1,2', '--L', '2,3')
    assert result.exit_code == EXIT_OK, result.output
    text = (tmp_path / 'oracle_compare.csv').read_text()
    assert 'entropy_L3' in text and 'ground_energy' in text


def test_repeated_runs_are_identical(invoke, tmp_path):
    invoke('spectrum', '--n', '8')
    first = (tmp_path / 'spectrum.csv').read_bytes()
    invoke('spectrum', '--n', '8')
    assert (tmp_path / 'spectrum.csv').read_bytes() == first
