"""Equal-time and imaginary-time correlators: fermion two-point functions,
transverse magnetization, static sigma^z sigma^z and the R(l) sums."""

import math
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from .numerics import QuadratureResult, integrate
from .propagators import mode_greens
from .spectrum import ChainParams, mode_arrays
from .utils import setup_module_logger

logger = setup_module_logger(__name__)


class FermionKind(Enum):
    """Operator order in <T op_b(tau2) op_a(tau1)>."""
    PSI_PSI_DAGGER = "psi psi^dagger"
    PSI_DAGGER_PSI = "psi^dagger psi"
    PSI_DAGGER_PSI_DAGGER = "psi^dagger psi^dagger"
    PSI_PSI = "psi psi"


def fermion_two_point(params: ChainParams, kind: FermionKind, b: int, a: int,
                      tau2: float, tau1: float, beta: float = math.inf) -> complex:
    """
    Time-ordered fermion two-point function <T op_b(tau2) op_a(tau1)>.

    Mode sum of e^{i phi_m (b - a)} / N times the cos^2/sin^2 weighted G+/G- for the
    normal kinds, or sin(2 theta) times (G+ - G-) for the anomalous ones. Equal-time,
    equal-site normal correlators receive the extra +1/2.

    Raises:
        IndexError: If a site index lies outside [0, N)
    """
    n = params.n_sites
    for name, site in (('a', a), ('b', b)):
        if not 0 <= site < n:
            raise IndexError(f"site {name}={site} outside [0, {n})")

    modes = mode_arrays(params)
    phase = np.exp(1j * modes.phi * (b - a)) / n
    cos2, sin2 = np.cos(modes.theta) ** 2, np.sin(modes.theta) ** 2
    sin_two = np.sin(2.0 * modes.theta)
    forward = tau2 - tau1

    if kind is FermionKind.PSI_PSI_DAGGER:
        g_plus, g_minus = mode_greens(modes.eps, forward, beta)
        value = np.sum(phase * (cos2 * g_plus + sin2 * g_minus))
    elif kind is FermionKind.PSI_DAGGER_PSI:
        g_plus, g_minus = mode_greens(modes.eps, -forward, beta)
        value = -np.sum(phase * (cos2 * g_plus + sin2 * g_minus))
    elif kind is FermionKind.PSI_DAGGER_PSI_DAGGER:
        g_plus, g_minus = mode_greens(modes.eps, -forward, beta)
        value = 0.5j * np.sum(phase * sin_two * (g_plus - g_minus))
    else:
        g_plus, g_minus = mode_greens(modes.eps, forward, beta)
        value = -0.5j * np.sum(phase * sin_two * (g_plus - g_minus))

    if kind in (FermionKind.PSI_PSI_DAGGER, FermionKind.PSI_DAGGER_PSI) and a == b and tau1 == tau2:
        value += 0.5
    return complex(value)


def transverse_magnetization(params: ChainParams) -> float:
    """<sigma^z> = (1/N) sum_m cos(2 theta_m), branch-resolved."""
    return float(np.mean(np.cos(2.0 * mode_arrays(params).theta)))


def magnetization_thermodynamic(h: float, r: float, variant: str = 'branch',
                                tol: float = 1e-12) -> QuadratureResult:
    """
    N -> infinity magnetization (1/pi) int_0^pi (h - cos phi) / sqrt(...) dphi.

    ``variant='printed'`` takes |h - cos phi| in the numerator instead; the two agree
    only for h >= 1.
    """
    if variant not in ('branch', 'printed'):
        raise ValueError(f"unknown magnetization variant '{variant}'")

    def integrand(phi):
        k = h - np.cos(phi)
        numerator = np.abs(k) if variant == 'printed' else k
        return numerator / np.hypot(k, r * np.sin(phi)) / np.pi

    breakpoints = [math.acos(h)] if abs(h) < 1 else None
    return integrate(integrand, 0.0, math.pi, tol=tol, breakpoints=breakpoints)


def magnetization_report(params: ChainParams, tol: float = 1e-12) -> Dict[str, float]:
    """Mode sum next to both thermodynamic integrands."""
    mode_sum = transverse_magnetization(params)
    branch = magnetization_thermodynamic(params.h, params.r, 'branch', tol)
    printed = magnetization_thermodynamic(params.h, params.r, 'printed', tol)
    return {
        'mode_sum': mode_sum,
        'branch_integral': branch.value,
        'printed_integral': printed.value,
        'printed_minus_branch': printed.value - branch.value,
        'est_error': max(branch.est_error, printed.est_error),
    }


def r_function(h: float, l: int, n_sites: Optional[int] = None, tol: float = 1e-12) -> float:
    """
    R(l) = (1/N) sum_m cos(phi_m l) / sqrt((h - cos phi_m)^2 + sin^2 phi_m).

    ``n_sites=None`` gives the thermodynamic integral (1/pi) int_0^pi.
    """
    if n_sites is None:
        result = integrate(
            lambda phi: np.cos(phi * l) / np.hypot(h - np.cos(phi), np.sin(phi)) / np.pi,
            0.0, math.pi, tol=tol, panels=max(1, abs(l) // 4))
        return float(result.value)
    modes = mode_arrays(ChainParams(n_sites, 1.0, h))
    return float(np.mean(np.cos(modes.phi * l) / np.hypot(modes.k, modes.l)))


def sigma_function(h: float, l: int, n_sites: Optional[int] = None, tol: float = 1e-12) -> float:
    """Sigma(l) = h R(l) - R(l + 1)."""
    return h * r_function(h, l, n_sites, tol) - r_function(h, l + 1, n_sites, tol)


def zz_mode_terms(params: ChainParams, l: int, t: float = 0.0) -> Tuple[complex, complex]:
    """
    Finite-N A_l(|t|) and B_l(|t|) with sigma^z sigma^z connected = A + B.

    A is the product of (2/N) sums weighted by cos^2 theta and sin^2 theta; B is the
    square of (1/N) sum sin 2theta sin(phi l).
    """
    modes = mode_arrays(params)
    n = params.n_sites
    phase = np.exp(-1j * abs(t) * modes.eps)
    cos_l = np.cos(modes.phi * l)
    a_first = 2.0 / n * np.sum(phase * np.cos(modes.theta) ** 2 * cos_l)
    a_second = 2.0 / n * np.sum(phase * np.sin(modes.theta) ** 2 * cos_l)
    b_root = np.sum(phase * np.sin(2.0 * modes.theta) * np.sin(modes.phi * l)) / n
    return complex(a_first * a_second), complex(b_root ** 2)


def zz_connected_static(params: ChainParams, l: int, method: str = 'auto') -> float:
    """
    Static connected <sigma^z_j sigma^z_{j+l}>.

    ``method='sigma'`` evaluates -Sigma(l) Sigma(-l) (r = 1 only); ``'modes'`` evaluates
    A + B at t = 0 for any r. ``'auto'`` picks sigma at r = 1.
    """
    if l == 0:
        raise ValueError("connected two-site correlator needs l != 0")
    if method == 'auto':
        method = 'sigma' if params.r == 1.0 else 'modes'
    if method == 'sigma':
        if params.r != 1.0:
            raise ValueError("the Sigma(l) form holds for r = 1 only")
        n = params.n_sites
        return -sigma_function(params.h, l, n) * sigma_function(params.h, -l, n)
    if method != 'modes':
        raise ValueError(f"unknown method '{method}'")
    a_term, b_term = zz_mode_terms(params, l, 0.0)
    return float((a_term + b_term).real)


def critical_angle(h: float) -> float:
    """phi_h with cos(phi_h) = h."""
    if abs(h) > 1:
        raise ValueError(f"phi_h undefined for |h| > 1 (h={h})")
    return math.acos(h)


def majorana_equal_time_xx(h: float, l: int) -> float:
    """
    Equal-time XX Majorana correlator (2/pi) sin(l phi_h) / l.

    The l = 0 value is the continuity limit (2/pi) phi_h.

    Raises:
        ValueError: If |h| > 1
    """
    phi_h = critical_angle(h)
    if l == 0:
        return 2.0 * phi_h / math.pi
    return 2.0 * math.sin(l * phi_h) / (math.pi * l)
