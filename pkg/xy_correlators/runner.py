"""Runs one CLI command: computes its table on a worker pool and writes the outputs."""

import math
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Tuple

from .config import RunConfig
from .driven import (CutoffReport, DriveProtocol, TimeGrid, correlator_from_traces, driven_mode_traces,
                     driven_partition, equal_time_driven, ground_state_grid, kz_sweep)
from .dynamic_correlators import critical_exponents, majorana_correlator, xx_bessel_series, zz_connected_time
from .entanglement import covariance_from_correlators, entropy, entropy_scaling_fit, static_source
from .error_handler import create_success_result, handle_processing_errors
from .file_writer import FileWriter
from .oracle import SpinChainSpec, ed_block_entropy, ed_build_and_diagonalize, oracle_rows, toy_model_check
from .performance_tracker import PerformanceTracker
from .propagators import prescription_table
from .spectrum import ChainParams, ground_energy, mode_set
from .static_correlators import (magnetization_report, r_function, sigma_function, transverse_magnetization,
                                 zz_connected_static)
from .utils import StageTimer, get_iso_timestamp, setup_module_logger

# (table name, rows, summary, converged, worst error estimate)
TableResult = Tuple[str, List[Dict[str, Any]], Dict[str, Any], bool, float]


class CorrelatorRunner:
    """Dispatches a validated RunConfig to the computation for its command."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.performance_tracker = PerformanceTracker()
        self.file_writer = FileWriter(config.output_folder, config.output_format)
        self.executor = None
        self.logger = setup_module_logger(__name__)
        self.logger.info(f"Runner initialized for '{config.command}' with {config.threads} worker(s)")

    @property
    def params(self) -> ChainParams:
        return ChainParams(self.config.n_sites, self.config.r, self.config.h)

    def run(self) -> Dict[str, Any]:
        """
        Compute and write the tables for the configured command.

        Returns:
            Result dictionary with output paths, convergence flag and timing
        """
        handler = getattr(self, '_run_' + self.config.command.replace('-', '_'))
        with StageTimer(self.config.command) as timer:
            with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
                self.executor = executor
                self.logger.info("=" * 60)
                self.logger.info(f"STEP 1: COMPUTING {self.config.command.upper()}")
                self.logger.info("=" * 60)
                start = self.performance_tracker.start_stage(self.config.command)
                with handle_processing_errors(self.logger, f"compute {self.config.command}",
                                              context={'n_sites': self.config.n_sites, 'r': self.config.r,
                                                       'h': self.config.h}):
                    tables = handler()
                for name, rows, _, converged, error in tables:
                    self.performance_tracker.record_stage(name, start, rows=len(rows), est_error=error,
                                                          converged=converged)

            self.logger.info("=" * 60)
            self.logger.info("STEP 2: WRITING OUTPUTS")
            self.logger.info("=" * 60)
            with handle_processing_errors(self.logger, f"write {self.config.command} tables"):
                outputs = self._write(tables)

        summary = self.performance_tracker.get_session_summary()
        result = create_success_result(
            status="success" if summary['converged'] else "not_converged",
            command=self.config.command,
            outputs=[str(path) for path in outputs],
            rows=summary['total_rows'],
            worst_est_error=summary['worst_est_error'],
            converged=summary['converged'],
            total_time=timer.duration_rounded,
        )
        self._log_final_results(result)
        return result

    def _write(self, tables: List[TableResult]) -> List[Path]:
        metadata = self.config.as_metadata()
        paths = []
        for name, rows, summary, converged, error in tables:
            table_metadata = dict(metadata, converged=str(converged), worst_est_error=repr(error))
            paths.append(self.file_writer.write_table(name, rows, summary, table_metadata))
            if summary:
                paths.append(self.file_writer.write_summary(f"{name}_fit", summary, table_metadata))
            self.logger.info(f"Wrote {len(rows)} rows to {paths[-1].parent}")
        return paths

    def _map(self, func, items) -> list:
        # executor.map keeps input order
        return list(self.executor.map(func, items))

    def _run_spectrum(self) -> List[TableResult]:
        params = self.params
        rows = [{'m': mode.m, 'phi': mode.phi, 'k': mode.k, 'l': mode.l, 'eps': mode.eps,
                 'theta': mode.theta, 'two_theta': 2.0 * mode.theta} for mode in mode_set(params)]
        summary = {'ground_energy': ground_energy(params), 'magnetization': transverse_magnetization(params)}
        return [('spectrum', rows, summary, True, 0.0)]

    def _run_prescription_demo(self) -> List[TableResult]:
        pairs = list(product(self.config.omega_values, self.config.beta_values))
        rows = prescription_table(pairs)
        worst = max(row['symmetric_abs_diff'] for row in rows)
        return [('prescription_demo', rows, {}, True, worst)]

    def _run_static(self) -> List[TableResult]:
        config = self.config
        fields = config.h_values or (config.h,)

        def one_point(point):
            h, l = point
            params = ChainParams(config.n_sites, config.r, h)
            majorana = majorana_correlator(params, l, 0.0, thermodynamic=config.thermodynamic,
                                           tol=config.tol, max_panels=config.max_panels)
            row = {'h': h, 'l': l, 'majorana': complex(majorana.value).real,
                   'majorana_err': majorana.est_error, 'zz_connected': math.nan,
                   'r_function': math.nan, 'sigma_function': math.nan}
            converged = majorana.converged
            if l != 0:
                if config.thermodynamic:
                    zz = zz_connected_time(params, l, 0.0, thermodynamic=True, tol=config.tol,
                                           max_panels=config.max_panels)
                    row['zz_connected'] = complex(zz.value).real
                    converged = converged and zz.converged
                else:
                    row['zz_connected'] = zz_connected_static(params, l)
            if config.r == 1.0:
                n_sites = None if config.thermodynamic else config.n_sites
                row['r_function'] = r_function(h, l, n_sites)
                row['sigma_function'] = sigma_function(h, l, n_sites)
            return row, converged

        outcomes = self._map(one_point, list(product(fields, config.l_values)))
        rows = [row for row, _ in outcomes]
        magnetization = [dict(h=h, **magnetization_report(ChainParams(config.n_sites, config.r, h)))
                         for h in fields]
        worst = max(row['majorana_err'] for row in rows)
        return [
            ('static', rows, {}, all(ok for _, ok in outcomes), worst),
            ('magnetization', magnetization, {}, True, max(m['est_error'] for m in magnetization)),
        ]

    def _run_dynamic(self) -> List[TableResult]:
        config = self.config
        params = self.params
        use_bessel = config.r == 0 and abs(config.h) < 1 and config.thermodynamic

        def one_point(point):
            l, t = point
            majorana = majorana_correlator(params, l, t, config.thermodynamic, config.tol, config.max_panels)
            row = {'l': l, 't': t, 'majorana_re': complex(majorana.value).real,
                   'majorana_im': complex(majorana.value).imag, 'majorana_err': majorana.est_error,
                   'zz_re': math.nan, 'zz_im': math.nan, 'xx_bessel': math.nan}
            converged = majorana.converged
            error = majorana.est_error
            if l != 0:
                zz = zz_connected_time(params, l, t, config.thermodynamic, config.tol, config.max_panels)
                row['zz_re'], row['zz_im'] = complex(zz.value).real, complex(zz.value).imag
                converged = converged and zz.converged
                error = max(error, zz.est_error)
            if use_bessel:
                series = xx_bessel_series(config.h, l, t, tol=config.tol)
                row['xx_bessel'] = series.value
                converged = converged and series.converged
            return row, converged, error

        outcomes = self._map(one_point, list(product(config.l_values, config.t_values)))
        rows = [row for row, _, _ in outcomes]
        return [('dynamic', rows, {}, all(o[1] for o in outcomes), max(o[2] for o in outcomes))]

    def _run_exponents(self) -> List[TableResult]:
        result = critical_exponents(self.config.lambda_values, tol=min(self.config.tol, 1e-12))
        summary = {key: value for key, value in result.items() if key != 'rows'}
        return [('exponents', result['rows'], summary, result['converged'], 0.0)]

    def _protocol(self, omega: float) -> DriveProtocol:
        if self.config.protocol == 'file':
            return DriveProtocol.from_file(omega, self.config.protocol_file)
        return DriveProtocol.linear(omega)

    def _grid(self, protocol: DriveProtocol) -> Tuple[TimeGrid, CutoffReport]:
        config = self.config
        return ground_state_grid(self.params, protocol, config.sigma_window, config.grid_points,
                                 beta_cutoff=config.beta_cutoff, beta=config.beta)

    def _run_driven(self) -> List[TableResult]:
        config = self.config
        params = self.params
        rows, summary = [], {}
        converged = True
        worst = 0.0
        for omega in config.omega_values:
            protocol = self._protocol(omega)
            grid, cutoff = self._grid(protocol)
            summary[f'beta_omega_{omega:g}'] = cutoff.beta
            summary[f'cutoff_error_omega_{omega:g}'] = cutoff.cutoff_error
            worst = max(worst, cutoff.cutoff_error)
            if config.r == 0 and config.thermodynamic:
                self.logger.info("XX chain: modes stay unmixed, using the exact instantaneous path")
                results = [equal_time_driven(params, protocol, grid, l, config.tau, thermodynamic=True,
                                             tol=config.tol) for l in config.l_values]
            else:
                traces = driven_mode_traces(params, protocol, grid, config.tau, map_fn=self._map)
                results = [correlator_from_traces(traces, l) for l in config.l_values]
                partition = driven_partition(params, protocol, grid, config.max_order, config.tol,
                                             map_fn=self._map)
                converged = converged and partition.converged
                summary[f'log_z0_omega_{omega:g}'] = partition.log_z0
                summary[f'log_z_omega_{omega:g}'] = partition.log_z
                summary[f'flagged_modes_omega_{omega:g}'] = len(partition.flagged_modes)
                worst = max(worst, partition.series_error)
            for result in results:
                rows.append({
                    'omega': omega, 'l': result.l, 'sigma': result.sigma,
                    'b_eq_re': result.value.real, 'b_eq_im': result.value.imag,
                    'b_static': result.static_part.real,
                    'b_quantum_re': result.quantum_part.real, 'b_quantum_im': result.quantum_part.imag,
                    'b_first_order_re': result.first_order_part.real,
                    'b_first_order_im': result.first_order_part.imag,
                })
        return [('driven', rows, summary, converged, worst)]

    def _run_kz(self) -> List[TableResult]:
        l_values = self.config.l_values
        result = kz_sweep(self.config.omega_values, l_values, r=self.config.r, tol=self.config.tol)
        summary = {'exponent': result['exponent'], 'intercept': result['intercept'],
                   'residual': result['residual']}
        converged, worst = result['converged'], result['worst_error']
        return [
            ('kz', result['rows'], summary, converged, worst),
            ('kz_correlators', result['correlator_rows'], {}, converged, worst),
        ]

    def _run_entropy(self) -> List[TableResult]:
        config = self.config
        fit = entropy_scaling_fit(config.h, config.r, config.block_lengths, n_sites=config.n_sites,
                                  thermodynamic=config.thermodynamic, bits=config.bits,
                                  tol=min(config.tol, 1e-10), map_fn=self._map)
        summary = {'slope': fit['slope'], 'intercept': fit['intercept'], 'residual': fit['residual'],
                   'units': 'bits' if config.bits else 'nats'}
        return [('entropy', fit['rows'], summary, fit['converged'], fit['worst_error'])]

    def _run_oracle_compare(self) -> List[TableResult]:
        config = self.config
        params = self.params
        t = config.t_values[0]
        rows = oracle_rows(params, [l for l in config.l_values if abs(l) < config.n_sites], t)

        spec = SpinChainSpec.xy(config.n_sites, config.r, config.h)
        data = ed_build_and_diagonalize(spec)
        source = static_source(params)
        for length in config.block_lengths:
            if length >= config.n_sites:
                continue
            formula = entropy(covariance_from_correlators(source, length))
            ed_value = ed_block_entropy(spec, length, data=data)
            rows.append({'quantity': f'entropy_L{length}', 'formula': formula, 'ed': ed_value,
                         'bdg': math.nan, 'ed_diff': abs(formula - ed_value), 'bdg_diff': math.nan})
        worst = max(row['ed_diff'] for row in rows)
        return [('oracle_compare', rows, {}, True, worst)]

    def _run_toy(self) -> List[TableResult]:
        pairs = list(product(self.config.omega_values, self.config.beta_values))
        rows = self._map(lambda pair: toy_model_check(*pair), pairs)
        return [('toy', rows, {}, True, max(row['diff'] for row in rows))]

    def _log_final_results(self, result: Dict[str, Any]) -> None:
        self.logger.info("=" * 80)
        self.logger.info(f"{self.config.command.upper()} COMPLETE")
        self.logger.info("=" * 80)
        self.logger.info(f"Total time: {result['total_time']}s")
        self.logger.info(f"Rows written: {result['rows']}")
        self.logger.info(f"Worst error estimate: {result['worst_est_error']:.3e}")
        for path in result['outputs']:
            self.logger.info(f"  📄 {path}")
        if not result['converged']:
            self.logger.warning("Some numerics did not converge - outputs carry converged=False")
        self.logger.info(f"Finished at {get_iso_timestamp()}")
        self.logger.info("=" * 80)
