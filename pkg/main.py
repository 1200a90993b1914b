#!/usr/bin/env python3
"""
XY Correlators - command-line front end

Examples:
  python3 main.py spectrum --n 16 --r 1 --h 0.5
  python3 main.py static --h 0.5 --r 1 --n 512 --l 1..4
  python3 main.py dynamic --r 0 --h 0.3 --l 1,2 --t 0..10:21 --thermodynamic
  python3 main.py kz --omega 1e-3..1e-1:7log --verbose
  python3 main.py oracle-compare --n 10 --format json
"""

import sys
import logging
from pathlib import Path
from typing import Any, Callable, Dict

import click
from dotenv import load_dotenv

# Add the current directory to Python path
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

from xy_correlators.config import Config, parse_config
from xy_correlators.error_handler import ConfigurationError, ConvergenceError, XYChainError
from xy_correlators.runner import CorrelatorRunner

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3

PACKAGE_LOGGERS = ['xy_correlators']
THIRD_PARTY_LOGGERS = ['numba', 'matplotlib', 'urllib3']


def setup_logging(verbose=False, level='INFO',
                  log_format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'):
    """Set up console logging based on verbosity level; level and format come from config.yaml."""
    root_logger = logging.getLogger()
    root_logger.handlers.clear()

    if verbose:
        level = getattr(logging, str(level).upper(), logging.INFO)
        logging.basicConfig(
            level=level,
            format=log_format,
            handlers=[logging.StreamHandler()]
        )
        for logger_name in PACKAGE_LOGGERS:
            logging.getLogger(logger_name).setLevel(level)
        for logger_name in THIRD_PARTY_LOGGERS:
            logging.getLogger(logger_name).setLevel(logging.WARNING)
    else:
        logging.basicConfig(
            level=logging.CRITICAL,
            handlers=[logging.NullHandler()]
        )
        for logger_name in PACKAGE_LOGGERS + THIRD_PARTY_LOGGERS:
            logger = logging.getLogger(logger_name)
            logger.setLevel(logging.CRITICAL)
            logger.addHandler(logging.NullHandler())


def print_header(command):
    """Print a simple header."""
    click.echo("=" * 60)
    click.echo(f"🚀 XY CORRELATORS: {command.upper()}")
    click.echo("=" * 60)
    click.echo()


def print_results(results, config):
    """Print results in a simple, clean format."""
    click.echo()
    click.echo("=" * 60)
    click.echo("📊 RESULTS")
    click.echo("=" * 60)

    for path in results.get('outputs', []):
        click.echo(f"   📄 {Path(path).name}")

    click.echo(f"\n📂 Output Location: {config.output_folder}/")
    click.echo(f"⏱️  Total Time: {results.get('total_time', 0)}s")

    status = "converged" if results.get('converged') else "NOT CONVERGED"
    click.echo(f"\n{'🎉' if results.get('converged') else '⚠️ '} {results.get('rows', 0)} rows, "
               f"worst error estimate {results.get('worst_est_error', 0.0):.3e}, {status}")


# (flag, RunConfig key, click keyword arguments)
_RUN_OPTIONS = [
    ('--n', 'n_sites', dict(type=int, help='Chain length N (even)')),
    ('--r', 'r', dict(type=float, help='Anisotropy r')),
    ('--h', 'h', dict(type=float, help='Transverse field h')),
    ('--l', 'l_values', dict(help='Separations, e.g. 1..4 or 1,2,5')),
    ('--t', 't_values', dict(help='Times, e.g. 0..10:21')),
    ('--h-values', 'h_values', dict(help='Field sweep for static tables')),
    ('--lambda', 'lambda_values', dict(help='Distances from criticality for exponents')),
    ('--omega', 'omega_values', dict(help='Drive rates or level spacings, e.g. 1e-3..1e-1:7log')),
    ('--beta-values', 'beta_values', dict(help='Inverse temperatures for prescription-demo and toy')),
    ('--L', 'block_lengths', dict(help='Block lengths for entropy')),
    ('--protocol', 'protocol', dict(type=click.Choice(['linear', 'file']), help='Drive protocol')),
    ('--protocol-file', 'protocol_file', dict(help='Two-column (sigma, h) text file')),
    ('--grid-points', 'grid_points', dict(type=int, help='Imaginary-time nodes per driven kernel')),
    ('--sigma-window', 'sigma_window', dict(help='Rescaled-time window as lo,hi')),
    ('--beta', 'beta', dict(type=float, help='Imaginary-time extent of the driven grid')),
    ('--tau', 'tau', dict(type=float, help='Instant at which driven correlators are taken')),
    ('--tol', 'tol', dict(type=float, help='Quadrature and series tolerance')),
    ('--max-order', 'max_order', dict(type=int, help='Plemelj series order')),
    ('--format', 'output_format', dict(type=click.Choice(['csv', 'json']), help='Output format')),
    ('--output', 'output_folder', dict(help='Output folder')),
    ('--threads', 'threads', dict(type=int, help='Worker pool size (XY_THREADS overrides config.yaml)')),
]

_SWITCHES = [
    ('--thermodynamic', 'thermodynamic', 'Use the N -> infinity integrals instead of mode sums'),
    ('--bits', 'bits', 'Report entropies in bits'),
]


def run_options(func: Callable) -> Callable:
    """Attach the shared run flags to a subcommand."""
    for flag, key, kwargs in reversed(_RUN_OPTIONS):
        func = click.option(flag, key, default=None, **kwargs)(func)
    for flag, key, help_text in reversed(_SWITCHES):
        func = click.option(flag, key, is_flag=True, default=False, help=help_text)(func)
    func = click.option('--config', 'config_file', type=click.Path(), default=None,
                        help='Run file (key=value lines or JSON)')(func)
    func = click.option('--verbose', is_flag=True, default=False, help='Enable verbose logging output')(func)
    return func


def execute(command: str, config_file, verbose: bool, options: Dict[str, Any]) -> None:
    """Validate, run and report one subcommand; always leaves through sys.exit."""
    try:
        base = Config()
    except (FileNotFoundError, ValueError) as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)

    setup_logging(verbose=verbose, level=base.logging_level, log_format=base.logging_format)
    for _, key, _ in _SWITCHES:
        if not options.get(key):
            options[key] = None

    try:
        config = parse_config(command, options, config_file, base=base)
    except ConfigurationError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)

    print_header(command)
    click.echo(f"⛓️  Chain: N={config.n_sites}, r={config.r}, h={config.h}")
    click.echo(f"📂 Output folder: {config.output_folder} ({config.output_format})")
    click.echo(f"🧵 Threads: {config.threads}")
    if verbose:
        click.echo("🔍 Verbose mode: ON (detailed logging enabled)")

    try:
        results = CorrelatorRunner(config).run()
    except KeyboardInterrupt:
        click.echo("\n❌ Interrupted by user", err=True)
        sys.exit(EXIT_FAILURE)
    except ConvergenceError as e:
        detail = f" (achieved {e.achieved_error:.3e})" if e.achieved_error is not None else ""
        click.echo(f"❌ Did not converge: {e}{detail}", err=True)
        sys.exit(EXIT_NOT_CONVERGED)
    except ConfigurationError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except XYChainError as e:
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(EXIT_FAILURE)
    except FileNotFoundError as e:
        click.echo(f"❌ File not found: {e}", err=True)
        sys.exit(EXIT_FAILURE)
    except Exception as e:
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(EXIT_FAILURE)

    print_results(results, config)
    click.echo()
    click.echo("=" * 60)
    sys.exit(EXIT_OK if results['status'] == 'success' else EXIT_NOT_CONVERGED)


@click.group()
def cli():
    """Correlation functions of the XY spin chain, static, dynamic and driven."""
    load_dotenv()


def _subcommand(name: str, help_text: str):
    @cli.command(name=name, help=help_text)
    @run_options
    def command(verbose, config_file, **options):
        execute(name, config_file, verbose, options)
    return command


spectrum = _subcommand('spectrum', 'Mode table: momenta, dispersion and Bogoliubov angles.')
prescription_demo = _subcommand('prescription-demo',
                                'Two-level partition function under symmetric and asymmetric prescriptions.')
static = _subcommand('static', 'Equal-time Majorana and zz correlators, magnetization, R(l).')
dynamic = _subcommand('dynamic', 'Real-time Majorana and zz correlators; Bessel series for r=0.')
exponents = _subcommand('exponents', 'Correlation length and decay exponents near h=1.')
driven = _subcommand('driven', 'Equal-time correlators and partition function under a field drive.')
kz = _subcommand('kz', 'Kibble-Zurek sweep: critical momentum, length scale and fitted exponent.')
entropy = _subcommand('entropy', 'Block entanglement entropy and its ln L slope.')
oracle_compare = _subcommand('oracle-compare', 'Closed forms against exact diagonalization and BdG.')
toy = _subcommand('toy', 'Two-spin toy model: spin trace against Fock trace.')


def main():
    """Main execution function."""
    cli()


if __name__ == '__main__':
    main()
