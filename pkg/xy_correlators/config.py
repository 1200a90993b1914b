"""Configuration management for XY Correlators."""

import os
import json
import yaml
from dataclasses import dataclass, field, asdict
from typing import Dict, Any, List, Optional, Tuple
from pathlib import Path

from .error_handler import ConfigurationError
from .utils import parse_range, safe_read_file


COMMANDS = (
    'spectrum', 'prescription-demo', 'static', 'dynamic', 'exponents',
    'driven', 'kz', 'entropy', 'oracle-compare', 'toy',
)


class Config:
    """Default settings loaded from config.yaml."""

    def __init__(self, config_path: str = None):
        """
        Initialize configuration.

        Args:
            config_path: Path to configuration YAML file. If None, uses default config.yaml
        """
        if config_path is None:
            config_path = Path(__file__).parent.parent / "config.yaml"

        self.config_path = Path(config_path)
        self._config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from YAML file."""
        try:
            with open(self.config_path, 'r') as f:
                config = yaml.safe_load(f)
            return config or {}
        except FileNotFoundError:
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")
        except yaml.YAMLError as e:
            raise ValueError(f"Invalid YAML in configuration file: {e}")

    @property
    def n_sites(self) -> int:
        """Get default chain length."""
        return self._config.get('chain', {}).get('n_sites', 512)

    @property
    def anisotropy(self) -> float:
        """Get default anisotropy r."""
        return self._config.get('chain', {}).get('r', 1.0)

    @property
    def field(self) -> float:
        """Get default transverse field h."""
        return self._config.get('chain', {}).get('h', 0.5)

    @property
    def tolerance(self) -> float:
        """Get quadrature and series tolerance."""
        return self._config.get('numerics', {}).get('tol', 1e-8)

    @property
    def max_panels(self) -> int:
        return self._config.get('numerics', {}).get('max_panels', 65536)

    @property
    def beta_cutoff(self) -> float:
        """Get the beta * eps_min product used when a finite beta stands in for the ground state."""
        return self._config.get('numerics', {}).get('beta_cutoff', 200.0)

    @property
    def drive_omega(self) -> float:
        return self._config.get('drive', {}).get('omega', 0.1)

    @property
    def drive_protocol(self) -> str:
        return self._config.get('drive', {}).get('protocol', 'linear')

    @property
    def drive_protocol_file(self) -> Optional[str]:
        return self._config.get('drive', {}).get('protocol_file')

    @property
    def drive_grid_points(self) -> int:
        """Get imaginary-time nodes per driven mode kernel."""
        return self._config.get('drive', {}).get('grid_points', 400)

    @property
    def drive_sigma_window(self) -> List[float]:
        return self._config.get('drive', {}).get('sigma_window', [0.0, 2.0])

    @property
    def drive_max_order(self) -> int:
        """Get Plemelj series order."""
        return self._config.get('drive', {}).get('max_order', 8)

    @property
    def output_folder(self) -> str:
        return self._config.get('output', {}).get('folder', 'outputs')

    @property
    def output_format(self) -> str:
        return self._config.get('output', {}).get('format', 'csv')

    @property
    def threads(self) -> int:
        """Get worker pool size."""
        return self._config.get('runtime', {}).get('threads', 4)

    @property
    def logging_level(self) -> str:
        """Get logging level."""
        return self._config.get('logging', {}).get('level', 'INFO')

    @property
    def logging_format(self) -> str:
        """Get logging format."""
        return self._config.get('logging', {}).get('format',
                               '%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    def run_defaults(self) -> Dict[str, Any]:
        """RunConfig field values taken from the YAML file."""
        return {
            'n_sites': self.n_sites,
            'r': self.anisotropy,
            'h': self.field,
            'tol': self.tolerance,
            'max_panels': self.max_panels,
            'beta_cutoff': self.beta_cutoff,
            'omega_values': (self.drive_omega,),
            'protocol': self.drive_protocol,
            'protocol_file': self.drive_protocol_file,
            'grid_points': self.drive_grid_points,
            'sigma_window': tuple(self.drive_sigma_window),
            'max_order': self.drive_max_order,
            'output_folder': self.output_folder,
            'output_format': self.output_format,
            'threads': self.threads,
        }


def _default_lambdas() -> Tuple[float, ...]:
    return tuple(parse_range('1e-5..1e-2:7log'))


@dataclass(frozen=True)
class RunConfig:
    """Validated request for one CLI run."""
    command: str
    n_sites: int = 512
    r: float = 1.0
    h: float = 0.5
    l_values: Tuple[int, ...] = (1,)
    t_values: Tuple[float, ...] = (0.0,)
    h_values: Tuple[float, ...] = ()
    lambda_values: Tuple[float, ...] = field(default_factory=_default_lambdas)
    omega_values: Tuple[float, ...] = (0.1,)
    beta_values: Tuple[float, ...] = (1.0,)
    block_lengths: Tuple[int, ...] = (2, 4, 8, 16, 32, 60)
    thermodynamic: bool = False
    protocol: str = 'linear'
    protocol_file: Optional[str] = None
    grid_points: int = 400
    beta: Optional[float] = None
    tau: Optional[float] = None
    sigma_window: Tuple[float, float] = (0.0, 2.0)
    max_order: int = 8
    tol: float = 1e-8
    max_panels: int = 65536
    beta_cutoff: float = 200.0
    bits: bool = False
    output_folder: str = 'outputs'
    output_format: str = 'csv'
    threads: int = 4

    def as_metadata(self) -> Dict[str, str]:
        """Flat string view for CSV/JSON metadata blocks."""
        metadata = {}
        for key, value in asdict(self).items():
            if isinstance(value, (tuple, list)):
                value = ','.join(repr(v) if isinstance(v, float) else str(v) for v in value)
            metadata[key] = str(value)
        return metadata


def _as_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError("boolean is not an integer")
    number = float(value)
    if number != int(number):
        raise ValueError(f"expected an integer, got {value!r}")
    return int(number)


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _as_optional_float(value: Any) -> Optional[float]:
    if value is None or (isinstance(value, str) and value.strip().lower() in ('', 'none', 'null')):
        return None
    return float(value)


def _as_optional_str(value: Any) -> Optional[str]:
    if value is None or (isinstance(value, str) and value.strip().lower() in ('', 'none', 'null')):
        return None
    return str(value)


def _as_float_tuple(value: Any) -> Tuple[float, ...]:
    return tuple(float(v) for v in parse_range(value))


def _as_int_tuple(value: Any) -> Tuple[int, ...]:
    return tuple(_as_int(v) for v in parse_range(value))


def _as_window(value: Any) -> Tuple[float, float]:
    values = _as_float_tuple(value) if not isinstance(value, (list, tuple)) else tuple(float(v) for v in value)
    if len(values) != 2:
        raise ValueError(f"expected two numbers, got {value!r}")
    return values


_CONVERTERS = {
    'n_sites': _as_int,
    'r': float,
    'h': float,
    'l_values': _as_int_tuple,
    't_values': _as_float_tuple,
    'h_values': _as_float_tuple,
    'lambda_values': _as_float_tuple,
    'omega_values': _as_float_tuple,
    'beta_values': _as_float_tuple,
    'block_lengths': _as_int_tuple,
    'thermodynamic': _as_bool,
    'protocol': str,
    'protocol_file': _as_optional_str,
    'grid_points': _as_int,
    'beta': _as_optional_float,
    'tau': _as_optional_float,
    'sigma_window': _as_window,
    'max_order': _as_int,
    'tol': float,
    'max_panels': _as_int,
    'beta_cutoff': float,
    'bits': _as_bool,
    'output_folder': str,
    'output_format': str,
    'threads': _as_int,
}

# Dotted names accepted in run files, mirroring config.yaml sections.
_ALIASES = {
    'chain.n_sites': 'n_sites', 'chain.r': 'r', 'chain.h': 'h',
    'numerics.tol': 'tol',
    'numerics.max_panels': 'max_panels', 'numerics.beta_cutoff': 'beta_cutoff',
    'drive.omega': 'omega_values', 'drive.protocol': 'protocol',
    'drive.protocol_file': 'protocol_file', 'drive.grid_points': 'grid_points',
    'drive.sigma_window': 'sigma_window', 'drive.max_order': 'max_order',
    'output.folder': 'output_folder', 'output.format': 'output_format',
    'runtime.threads': 'threads',
    'n': 'n_sites', 'l': 'l_values', 't': 't_values', 'omega': 'omega_values',
    'lambda': 'lambda_values', 'L': 'block_lengths', 'format': 'output_format',
}

# Keys a command cannot take from config.yaml alone.
_REQUIRED_EXPLICIT = {
    'kz': ('omega_values',),
}


def _canonical_key(key: str) -> str:
    key = key.strip()
    canonical = _ALIASES.get(key, key)
    if canonical not in _CONVERTERS:
        raise ConfigurationError("unknown key", f"config.{key}")
    return canonical


def _flatten(data: Dict[str, Any], prefix: str = '') -> Dict[str, Any]:
    flat = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def load_run_file(path: str) -> Dict[str, Any]:
    """
    Read a run-specific config file, either JSON or flat ``key=value`` lines.

    Returns:
        Mapping of canonical RunConfig field names to raw values

    Raises:
        ConfigurationError: On unreadable files, malformed lines or unknown keys
    """
    try:
        text = safe_read_file(Path(path))
    except IOError as e:
        raise ConfigurationError(str(e), "config")

    raw: Dict[str, Any] = {}
    if text.lstrip().startswith('{'):
        try:
            raw = _flatten(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"invalid JSON ({e})", "config")
    else:
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigurationError(f"line {number} is not key=value", "config")
            key, value = line.split('=', 1)
            raw[key.strip()] = value.strip()

    return {_canonical_key(key): value for key, value in raw.items()}


def _validate(config: RunConfig) -> None:
    if config.command not in COMMANDS:
        raise ConfigurationError(f"unknown command '{config.command}'", "command")
    if config.n_sites <= 0 or config.n_sites % 2:
        raise ConfigurationError("must be a positive even integer", "n_sites")
    if config.command == 'oracle-compare' and config.n_sites > 12:
        raise ConfigurationError("exact diagonalization supports at most 12 sites", "n_sites")
    if config.tol <= 0:
        raise ConfigurationError("must be positive", "tol")
    if config.max_panels < 1:
        raise ConfigurationError("must be positive", "max_panels")
    if config.beta_cutoff <= 0:
        raise ConfigurationError("must be positive", "beta_cutoff")
    if config.grid_points < 64 or config.grid_points % 2:
        raise ConfigurationError("must be an even integer >= 64", "grid_points")
    if any(omega <= 0 for omega in config.omega_values):
        raise ConfigurationError("rates must be positive", "omega_values")
    if any(beta <= 0 for beta in config.beta_values):
        raise ConfigurationError("inverse temperatures must be positive", "beta_values")
    if config.beta is not None and config.beta <= 0:
        raise ConfigurationError("must be positive", "beta")
    if config.sigma_window[0] >= config.sigma_window[1]:
        raise ConfigurationError("lower edge must be below upper edge", "sigma_window")
    if any(lam <= 0 or lam >= 1 for lam in config.lambda_values):
        raise ConfigurationError("distances from criticality must lie in (0, 1)", "lambda_values")
    if any(length < 1 for length in config.block_lengths):
        raise ConfigurationError("block lengths must be positive", "block_lengths")
    if config.max_order < 2:
        raise ConfigurationError("must be at least 2", "max_order")
    if config.protocol not in ('linear', 'file'):
        raise ConfigurationError("must be 'linear' or 'file'", "protocol")
    if config.protocol == 'file' and not config.protocol_file:
        raise ConfigurationError("required when protocol is 'file'", "protocol_file")
    if config.output_format not in ('csv', 'json'):
        raise ConfigurationError("must be 'csv' or 'json'", "output_format")
    if config.threads < 1:
        raise ConfigurationError("must be at least 1", "threads")
    if config.command == 'exponents' and len(config.lambda_values) < 2:
        raise ConfigurationError("a fit needs at least two points", "lambda_values")
    if config.command == 'kz' and len(config.omega_values) < 2:
        raise ConfigurationError("a fit needs at least two rates", "omega_values")


def parse_config(command: str, options: Dict[str, Any], config_file: Optional[str] = None,
                 base: Optional[Config] = None) -> RunConfig:
    """
    Merge defaults, run file and command-line options into a validated RunConfig.

    Precedence, lowest first: config.yaml, XY_THREADS, run file, flags. Options whose
    value is None are treated as not given.

    Raises:
        ConfigurationError: On unknown keys, unconvertible values or failed validation
    """
    base = base or Config()
    merged: Dict[str, Any] = dict(base.run_defaults())

    env_threads = os.getenv('XY_THREADS')
    if env_threads:
        merged['threads'] = env_threads

    explicit = set()
    if config_file:
        from_file = load_run_file(config_file)
        merged.update(from_file)
        explicit.update(from_file)

    for key, value in options.items():
        if value is None:
            continue
        canonical = _canonical_key(key)
        merged[canonical] = value
        explicit.add(canonical)

    for key in _REQUIRED_EXPLICIT.get(command, ()):
        if key not in explicit:
            raise ConfigurationError(f"required for '{command}'", key)

    values = {}
    for key, value in merged.items():
        try:
            values[key] = _CONVERTERS[key](value)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(str(e), key)

    config = RunConfig(command=command, **values)
    _validate(config)
    return config
