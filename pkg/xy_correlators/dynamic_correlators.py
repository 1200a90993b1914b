"""Real-time correlators: connected sigma^z sigma^z, the Majorana correlator B_l(t),
the XX Bessel series, and critical-exponent fits."""

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .error_handler import ConvergenceError
from .numerics import QuadratureResult, bessel_j, bessel_j_sequence, fit_power_law, integrate
from .spectrum import ChainParams, dispersion_continuum, mode_arrays, two_theta_unchecked
from .static_correlators import critical_angle, zz_mode_terms
from .utils import setup_module_logger

logger = setup_module_logger(__name__)

BESSEL_MAX_ORDER = 4000


@dataclass(frozen=True)
class TimeSeries:
    """Correlator values on an ascending time grid."""
    times: np.ndarray
    values: np.ndarray
    params: ChainParams
    l: int
    est_errors: np.ndarray = field(default=None)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have equal lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


class BesselSeriesResult(NamedTuple):
    value: float
    k_max: int
    tail_bound: float
    converged: bool


def _start_panels(t: float, r: float, l: int) -> int:
    # eps'(phi) is bounded by 2 max(1, |r|)
    return int(math.ceil(1 + abs(t) * 2.0 * max(1.0, abs(r)) + abs(l) / 4.0))


def _xx_breakpoints(h: float, r: float) -> List[float]:
    if r == 0 and abs(h) < 1:
        phi_h = math.acos(h)
        return [phi_h, 2.0 * math.pi - phi_h]
    return []


def majorana_correlator(params: ChainParams, l: int, t: float, thermodynamic: bool = False,
                        tol: float = 1e-10, max_panels: int = 65536) -> QuadratureResult:
    """
    Real-time Majorana correlator B_l(t).

    Finite N: -(1/N) sum_m e^{i phi_m l - 2i theta_m} e^{-i|t| eps_m}.
    Thermodynamic: -(1/2pi) int_0^{2pi} of the same integrand; ``params.n_sites`` is
    ignored. Depends on |t| only.
    """
    h, r = params.h, params.r
    if not thermodynamic:
        modes = mode_arrays(params)
        value = -np.mean(np.exp(1j * (modes.phi * l - 2.0 * modes.theta) - 1j * abs(t) * modes.eps))
        return QuadratureResult(value=complex(value), est_error=0.0, panels=0)

    def integrand(phi):
        exponent = l * phi - two_theta_unchecked(h, r, phi) - abs(t) * dispersion_continuum(h, r, phi)
        return -np.exp(1j * exponent) / (2.0 * math.pi)

    breakpoints = [math.pi] + _xx_breakpoints(h, r)
    return integrate(integrand, 0.0, 2.0 * math.pi, tol=tol, panels=_start_panels(t, r, l),
                     max_panels=max_panels, breakpoints=breakpoints)


def zz_connected_time(params: ChainParams, l: int, t: float, thermodynamic: bool = False,
                      tol: float = 1e-10, max_panels: int = 65536) -> QuadratureResult:
    """
    Connected <T sigma^z_j(t) sigma^z_k(0)> = A_l(|t|) + B_l(|t|), l = j - k.

    The thermodynamic form factorizes into products of one-dimensional integrals
    over (0, pi); est_error propagates the quadrature estimates to first order.
    """
    if not thermodynamic:
        a_term, b_term = zz_mode_terms(params, l, t)
        return QuadratureResult(value=a_term + b_term, est_error=0.0, panels=0)

    h, r = params.h, params.r
    panels = _start_panels(t, r, l)
    breakpoints = [math.acos(h)] if r == 0 and abs(h) < 1 else None

    def factor(sign):
        def integrand(phi):
            eps = dispersion_continuum(h, r, phi)
            weight = (eps + sign * 2.0 * (h - np.cos(phi))) / eps
            return np.exp(-1j * abs(t) * eps) * weight * np.cos(phi * l) / math.pi
        return integrate(integrand, 0.0, math.pi, tol=tol, panels=panels, max_panels=max_panels,
                         breakpoints=breakpoints)

    def anomalous(phi):
        eps = dispersion_continuum(h, r, phi)
        return 2.0 * r * np.sin(phi) / eps * np.exp(-1j * abs(t) * eps) * np.sin(phi * l) / math.pi

    first, second = factor(+1.0), factor(-1.0)
    root = integrate(anomalous, 0.0, math.pi, tol=tol, panels=panels, max_panels=max_panels,
                     breakpoints=breakpoints)
    value = first.value * second.value + root.value ** 2
    est_error = (abs(second.value) * first.est_error + abs(first.value) * second.est_error
                 + 2.0 * abs(root.value) * root.est_error)
    return QuadratureResult(value=complex(value), est_error=float(est_error),
                            panels=first.panels + second.panels + root.panels,
                            converged=first.converged and second.converged and root.converged)


def _bessel_tail_bound(t: float, k_max: int) -> float:
    # |J_k(2t)| <= t^k / k!; geometric bound on the remaining terms
    t = abs(t)
    if t == 0:
        return 0.0
    k = k_max + 1
    ratio = t / (k + 1)
    if ratio >= 1:
        return math.inf
    return math.exp(k * math.log(t) - gammaln(k + 1)) / (1.0 - ratio)


def xx_bessel_series(h: float, l: int, t: float, tol: float = 1e-12) -> BesselSeriesResult:
    """
    XX correlator as the Bessel series
    (2/pi) sum_k J_k(2t) sin((l+k) phi_h)/(l+k) cos(2ht - k pi/2).

    The l + k = 0 term uses the continuity value phi_h. The series is truncated once
    the bound on the discarded terms drops below tol; the bound is reported.

    Raises:
        ValueError: If |h| > 1
    """
    phi_h = critical_angle(h)
    k_max = int(math.ceil(math.e * abs(t))) + 12
    bound = (4.0 * phi_h / math.pi) * _bessel_tail_bound(t, k_max)
    while bound >= tol and k_max < BESSEL_MAX_ORDER:
        k_max += 8
        bound = (4.0 * phi_h / math.pi) * _bessel_tail_bound(t, k_max)
    converged = bound < tol
    if not converged:
        logger.warning(f"Bessel series at t={t} stopped at k={k_max} with tail bound {bound:.3e}")

    bessel = bessel_j_sequence(k_max, 2.0 * t)
    total = 0.0
    for k in range(-k_max, k_max + 1):
        j_k = bessel[abs(k)] * (-1.0 if k < 0 and k % 2 else 1.0)
        n = l + k
        shape = phi_h if n == 0 else math.sin(n * phi_h) / n
        total += j_k * shape * math.cos(2.0 * h * t - 0.5 * k * math.pi)
    logger.debug(f"Bessel series h={h} l={l} t={t}: k_max={k_max}, tail<{bound:.2e}")
    return BesselSeriesResult(value=2.0 * total / math.pi, k_max=k_max, tail_bound=bound,
                              converged=converged)


def xx_cosine_quadrature(h: float, l: int, t: float, tol: float = 1e-12) -> QuadratureResult:
    """(1/pi) int_{-phi_h}^{phi_h} cos(l phi) cos(2t (h - cos phi)) dphi by quadrature."""
    phi_h = critical_angle(h)
    return integrate(
        lambda phi: np.cos(l * phi) * np.cos(2.0 * t * (h - np.cos(phi))) / math.pi,
        -phi_h, phi_h, tol=tol, panels=_start_panels(t, 0.0, l))


def xx_full_correlator(h: float, l: int, t: float, tol: float = 1e-12) -> complex:
    """
    Full r = 0 Majorana correlator from the cosine form:
    B_l(t) = cosine form - i^l e^{-2ih|t|} J_l(2|t|).

    At t = 0 the correction only touches l = 0, where it turns (2/pi) phi_h into
    -<sigma^z>.
    """
    series = xx_bessel_series(h, l, t, tol)
    correction = (1j ** (l % 4)) * np.exp(-2j * h * abs(t)) * bessel_j(l, 2.0 * abs(t))
    return complex(series.value - correction)


def time_series(params: ChainParams, l: int, times: Sequence[float], observable: str = 'majorana',
                thermodynamic: bool = False, tol: float = 1e-10) -> TimeSeries:
    """Evaluate B_l(t) or the connected zz correlator on a time grid."""
    evaluator = {'majorana': majorana_correlator, 'zz': zz_connected_time}.get(observable)
    if evaluator is None:
        raise ValueError(f"unknown observable '{observable}'")
    results = [evaluator(params, l, t, thermodynamic=thermodynamic, tol=tol) for t in times]
    return TimeSeries(times=np.asarray(times, dtype=float),
                      values=np.array([res.value for res in results], dtype=complex),
                      params=params, l=l,
                      est_errors=np.array([res.est_error for res in results]))


def near_critical_envelope(lam: float, t: float, tol: float = 1e-13) -> float:
    """
    Modulus of the analytic signal of B_1(t) for the XX chain at h = 1 - lam.

    B_1(t) = Re Z(t) with Z(t) = (1/pi) int cos(phi) e^{-2it(2 sin^2(phi/2) - lam)} dphi.
    Every frequency of Z has one sign on |phi| < phi_h, so conj(Z) is the analytic signal
    and |Z| the envelope; the carrier e^{2i lam t} drops out of the modulus.
    """
    phi_h = 2.0 * math.asin(math.sqrt(0.5 * lam))
    result = integrate(
        lambda phi: np.cos(phi) * np.exp(-4j * t * np.sin(0.5 * phi) ** 2) / math.pi,
        -phi_h, phi_h, tol=tol, panels=4)
    return abs(complex(result.value))


def decorrelation_time(lam: float, threshold: float = math.exp(-1), tol: float = 1e-13,
                       scan_points: int = 400, scan_extent: float = 20.0) -> float:
    """
    First t where the envelope of B_1(t) falls to ``threshold`` of its t=0 value, for the
    XX chain at h = 1 - lam.

    The envelope, not B_1 itself, is tracked so the cos(2 lam t) carrier cannot put the
    crossing on a node. Scans t * lam over (0, scan_extent] and refines the bracketing
    interval with brentq.

    Raises:
        ConvergenceError: If no crossing is found in the scanned range
    """
    b_zero = near_critical_envelope(lam, 0.0, tol)

    def excess(t):
        return near_critical_envelope(lam, t, tol) / b_zero - threshold

    previous_t, previous = 0.0, 1.0 - threshold
    for t in np.linspace(scan_extent / lam / scan_points, scan_extent / lam, scan_points):
        current = excess(t)
        if current <= 0 < previous:
            return float(brentq(excess, previous_t, t, xtol=1e-12 * max(1.0, t)))
        previous_t, previous = t, current
    raise ConvergenceError(f"B_1(t) envelope never dropped below {threshold:.3f} of its t=0 value (lambda={lam})")


def critical_exponents(lambda_values: Sequence[float], tol: float = 1e-13) -> Dict:
    """
    nu from log phi_h against log lambda and z from log t* against log xi, xi = 1/phi_h.

    phi_h = arccos(1 - lambda) is evaluated as 2 asin(sqrt(lambda/2)) to keep full
    precision at small lambda. A lambda whose envelope never crosses the threshold keeps
    its row with t_star = nan and converged = False and is left out of the z fit.
    """
    lambdas = np.asarray(sorted(lambda_values), dtype=float)
    phi_h = 2.0 * np.arcsin(np.sqrt(0.5 * lambdas))
    xi = 1.0 / phi_h
    t_star = np.full(len(lambdas), math.nan)
    for index, lam in enumerate(lambdas):
        try:
            t_star[index] = decorrelation_time(lam, tol=tol)
        except ConvergenceError as e:
            logger.warning(f"lambda={lam:.3g}: {e}")

    found = np.isfinite(t_star)
    nu, _, nu_residual = fit_power_law(lambdas, phi_h)
    if np.count_nonzero(found) >= 2:
        z, _, z_residual = fit_power_law(xi[found], t_star[found])
    else:
        z, z_residual = math.nan, math.nan
    rows = [
        {'lambda': float(lam), 'phi_h': float(p), 'xi': float(x), 't_star': float(ts),
         'phi_h_over_sqrt_2lambda': float(p / math.sqrt(2.0 * lam)), 'converged': bool(ok)}
        for lam, p, x, ts, ok in zip(lambdas, phi_h, xi, t_star, found)
    ]
    logger.info(f"Fitted nu={nu:.4f}, z={z:.4f} over {len(lambdas)} points")
    return {'nu': nu, 'z': z, 'nu_residual': nu_residual, 'z_residual': z_residual, 'rows': rows,
            'converged': bool(np.all(found))}


def decay_power(params: ChainParams, l: int = 1, t_min: float = 20.0, t_max: float = 200.0,
                windows: int = 8, half_width: float = 6.0, samples: int = 48,
                tol: float = 1e-10) -> Dict:
    """
    Power p in |B_l(t)| ~ t^{-p} from the window RMS of the thermodynamic correlator.

    The RMS over [t_c - half_width, t_c + half_width] averages out the oscillation
    before the log-log fit.
    """
    centers = np.geomspace(t_min, t_max, windows)
    rms = []
    for center in centers:
        times = np.linspace(center - half_width, center + half_width, samples)
        values = [majorana_correlator(params, l, t, thermodynamic=True, tol=tol).value for t in times]
        rms.append(math.sqrt(float(np.mean(np.abs(values) ** 2))))
    slope, _, residual = fit_power_law(centers, rms)
    return {'p': -slope, 'residual': residual,
            'rows': [{'t_center': float(c), 'rms': float(v)} for c, v in zip(centers, rms)]}
