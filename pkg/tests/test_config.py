import json

import pytest

from xy_correlators.config import Config, RunConfig, load_run_file, parse_config
from xy_correlators.error_handler import ConfigurationError


@pytest.fixture(autouse=True)
def no_thread_override(monkeypatch):
    monkeypatch.delenv('XY_THREADS', raising=False)


@pytest.fixture
def base(tmp_path):
    path = tmp_path / 'config.yaml'
    path.write_text("chain:\n  n_sites: 64\n  r: 0.5\n  h: 0.25\nruntime:\n  threads: 2\n")
    return Config(str(path))


def test_yaml_defaults(base):
    config = parse_config('spectrum', {}, base=base)
    assert (config.n_sites, config.r, config.h, config.threads) == (64, 0.5, 0.25, 2)
    assert config.tol == 1e-8
    assert config.beta_cutoff == 200.0


def test_flags_expand_ranges(base):
    config = parse_config('static', {'h': '0.5', 'r': '1', 'n_sites': '512', 'l_values': '1..4'}, base=base)
    assert config.l_values == (1, 2, 3, 4)
    assert config.n_sites == 512
    assert config.h == 0.5


def test_log_spaced_lambda(base):
    config = parse_config('exponents', {'lambda_values': '1e-4..1e-2:3log'}, base=base)
    assert config.lambda_values == pytest.approx((1e-4, 1e-3, 1e-2))


def test_none_options_ignored(base):
    assert parse_config('spectrum', {'h': None}, base=base).h == 0.25


def test_key_value_run_file(base, run_file):
    path = run_file("# sweep\nn=32\nchain.h = 0.75\nl = 1,3\n")
    config = parse_config('static', {}, config_file=path, base=base)
    assert (config.n_sites, config.h, config.l_values) == (32, 0.75, (1, 3))


def test_json_run_file(base, run_file):
    path = run_file(json.dumps({'chain': {'r': 0.0}, 'drive': {'omega': [0.1, 0.2]}}), 'runs.json')
    config = parse_config('kz', {}, config_file=path, base=base)
    assert config.r == 0.0
    assert config.omega_values == (0.1, 0.2)


def test_flags_override_run_file(base, run_file):
    path = run_file("h=0.75\n")
    assert parse_config('spectrum', {'h': 1.5}, config_file=path, base=base).h == 1.5


def test_unknown_key_names_field(run_file):
    path = run_file("frobnicate=1\n")
    with pytest.raises(ConfigurationError, match=r"config\.frobnicate: unknown key"):
        load_run_file(path)


def test_malformed_line(run_file):
    with pytest.raises(ConfigurationError):
        load_run_file(run_file("n 32\n"))


def test_env_threads_below_run_file(base, run_file, monkeypatch):
    monkeypatch.setenv('XY_THREADS', '7')
    assert parse_config('spectrum', {}, base=base).threads == 7
    path = run_file("runtime.threads=3\n")
    assert parse_config('spectrum', {}, config_file=path, base=base).threads == 3


def test_kz_needs_explicit_rates(base):
    with pytest.raises(ConfigurationError, match="omega_values: required for 'kz'"):
        parse_config('kz', {}, base=base)


@pytest.mark.parametrize("options,field", [
    ({'n_sites': 63}, 'n_sites'),
    ({'n_sites': 2.5}, 'n_sites'),
    ({'grid_points': 50}, 'grid_points'),
    ({'output_format': 'xml'}, 'output_format'),
    ({'protocol': 'file'}, 'protocol_file'),
    ({'sigma_window': '2,1'}, 'sigma_window'),
    ({'threads': 0}, 'threads'),
    ({'beta_cutoff': 0}, 'beta_cutoff'),
    ({'h': 'abc'}, 'h'),
])
def test_invalid_values(base, options, field):
    with pytest.raises(ConfigurationError) as info:
        parse_config('spectrum', options, base=base)
    assert info.value.field_path == field


def test_oracle_size_limit(base):
    with pytest.raises(ConfigurationError):
        parse_config('oracle-compare', {'n_sites': 14}, base=base)
    assert parse_config('oracle-compare', {'n_sites': 10}, base=base).n_sites == 10


def test_exponents_need_two_points(base):
    with pytest.raises(ConfigurationError):
        parse_config('exponents', {'lambda_values': '0.01'}, base=base)


def test_metadata_is_flat_strings():
    metadata = RunConfig(command='static', l_values=(1, 2), h=0.5).as_metadata()
    assert metadata['l_values'] == '1,2'
    assert metadata['h'] == '0.5'
    assert all(isinstance(value, str) for value in metadata.values())

