"""Block entanglement entropy from Majorana covariance matrices."""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Sequence

import numpy as np
from scipy.special import entr

from .driven import DrivenTraces, correlator_from_traces
from .dynamic_correlators import majorana_correlator
from .error_handler import ConvergenceError, CovarianceError
from .numerics import eig_antisym
from .spectrum import ChainParams
from .utils import setup_module_logger

logger = setup_module_logger(__name__)

ANTISYMMETRY_TOL = 1e-12
SPECTRUM_TOL = 1e-9

# l -> B_l(0) at equal time
CorrelatorSource = Callable[[int], float]


@dataclass(frozen=True)
class CovarianceMatrix:
    """
    Real antisymmetric gamma with <g_m g_n> = delta_mn + i gamma_mn for an L-site block.

    Majoranas are ordered per site: g_{2a} = c_a^dag + c_a, g_{2a+1} = -i (c_a^dag - c_a).
    """
    block_length: int
    gamma: np.ndarray

    def __post_init__(self):
        size = 2 * self.block_length
        if self.block_length <= 0 or self.gamma.shape != (size, size):
            raise CovarianceError(f"gamma of shape {self.gamma.shape} does not fit L={self.block_length}")
        if np.max(np.abs(self.gamma + self.gamma.T)) > ANTISYMMETRY_TOL:
            raise CovarianceError("gamma is not antisymmetric")


def static_source(params: ChainParams, thermodynamic: bool = False, tol: float = 1e-12) -> CorrelatorSource:
    """Equal-time B_l from the static mode sum, or the N -> infinity integral."""
    est_errors: Dict[int, float] = {}

    @lru_cache(maxsize=None)
    def source(l: int) -> float:
        result = majorana_correlator(params, l, 0.0, thermodynamic=thermodynamic, tol=tol)
        est_errors[l] = result.est_error
        if not result.converged:
            raise ConvergenceError(f"B_{l}(0) did not converge", achieved_error=result.est_error)
        value = complex(result.value)
        if abs(value.imag) > 1e-8:
            logger.warning(f"B_{l}(0) carries an imaginary part {value.imag:.3e}; dropped")
        return value.real

    source.est_errors = est_errors
    return source


def driven_source(traces: DrivenTraces, tol: float = 1e-8) -> CorrelatorSource:
    """Equal-time driven B^eq_l at the node the traces were taken at."""

    @lru_cache(maxsize=None)
    def source(l: int) -> float:
        value = correlator_from_traces(traces, l).value
        if abs(value.imag) > tol:
            logger.warning(f"driven B_{l} at sigma={traces.sigma:.4g} carries an imaginary part "
                           f"{value.imag:.3e}; dropped")
        return value.real

    return source


def covariance_from_correlators(source: CorrelatorSource, block_length: int) -> CovarianceMatrix:
    """
    Block covariance from B_{a-b}: gamma[2b, 2a+1] = B_{a-b}, gamma[2a+1, 2b] = -B_{a-b}.

    The A-A and B-B blocks vanish for the real (time-reversal even) states used here.
    """
    size = 2 * block_length
    gamma = np.zeros((size, size))
    for a in range(block_length):
        for b in range(block_length):
            value = source(a - b)
            gamma[2 * b, 2 * a + 1] = value
            gamma[2 * a + 1, 2 * b] = -value
    gamma = 0.5 * (gamma - gamma.T)
    return CovarianceMatrix(block_length=block_length, gamma=gamma)


def binary_entropy(p):
    """H2(p) in nats."""
    p = np.asarray(p, dtype=float)
    return entr(p) + entr(1.0 - p)


def entropy(covariance: CovarianceMatrix, bits: bool = False) -> float:
    """
    S = sum_k H2((1 + nu_k) / 2) over the nonnegative eigenvalues nu_k of i*gamma.

    Raises:
        CovarianceError: If some nu_k exceeds 1 by more than 1e-9
    """
    nu = eig_antisym(covariance.gamma)
    if np.any(nu > 1.0 + SPECTRUM_TOL):
        raise CovarianceError(f"i*gamma eigenvalue {nu.max():.12g} outside [-1, 1]")
    nu = np.clip(nu, 0.0, 1.0)
    value = float(np.sum(binary_entropy(0.5 * (1.0 + nu))))
    return value / math.log(2.0) if bits else value


def entropy_table(source: CorrelatorSource, block_lengths: Sequence[int], bits: bool = False,
                  map_fn: Callable = map) -> list:
    """
    (L, S) rows; block sizes are independent and may be mapped in parallel.

    A block whose correlators do not converge keeps its row with S = nan and
    converged = False.
    """
    def one_block(length: int) -> Dict[str, float]:
        try:
            value = entropy(covariance_from_correlators(source, length), bits)
        except ConvergenceError as e:
            logger.warning(f"S(L={length}) skipped: {e}")
            return {'L': int(length), 'entropy': math.nan, 'converged': False}
        return {'L': int(length), 'entropy': value, 'converged': True}

    return list(map_fn(one_block, block_lengths))


def entropy_scaling_fit(h: float, r: float, block_lengths: Sequence[int], n_sites: int = 512,
                        thermodynamic: bool = True, bits: bool = False, tol: float = 1e-12,
                        map_fn: Callable = map) -> Dict:
    """
    Least-squares slope of S(L) against ln L.

    Close to 1/3 for the critical XX chain and 1/6 for the critical Ising chain; a
    gapped chain saturates.
    """
    if len(block_lengths) < 2:
        raise ValueError("a fit needs at least two block lengths")
    source = static_source(ChainParams(n_sites, r, h), thermodynamic=thermodynamic, tol=tol)
    rows = entropy_table(source, block_lengths, bits, map_fn)
    kept = [row for row in rows if row['converged']]
    if len(kept) < 2:
        raise ConvergenceError(f"only {len(kept)} block(s) converged; a fit needs two")
    log_l = np.log([row['L'] for row in kept])
    values = np.array([row['entropy'] for row in kept])
    slope, intercept = np.polyfit(log_l, values, 1)
    residual = float(np.sqrt(np.mean((values - (slope * log_l + intercept)) ** 2)))
    logger.info(f"S(L) slope {slope:.4f} over L in [{min(block_lengths)}, {max(block_lengths)}]")
    return {'rows': rows, 'slope': float(slope), 'intercept': float(intercept), 'residual': residual,
            'worst_error': max(source.est_errors.values(), default=0.0),
            'converged': len(kept) == len(rows)}
