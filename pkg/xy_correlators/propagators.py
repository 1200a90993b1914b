"""Imaginary-time Green's functions, their real-time phases, and the oscillator
prescription demonstration."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Tuple

import numpy as np
from scipy.special import expit

from .numerics import solve
from .utils import setup_module_logger

logger = setup_module_logger(__name__)


class Prescription(Enum):
    """Equal-time value of the step function: 1/2 (symmetric) or 0 (G(tau, tau + 0))."""
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"

    @property
    def step_at_zero(self) -> float:
        return 0.5 if self is Prescription.SYMMETRIC else 0.0


@dataclass(frozen=True)
class PropagatorSpec:
    """Constant-energy antiperiodic propagator; beta may be math.inf."""
    eps: float
    beta: float = math.inf
    prescription: Prescription = Prescription.SYMMETRIC

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def fermi(eps, beta):
    """(1 + e^{beta*eps})^{-1}; zero (or one for eps < 0) when beta is infinite."""
    eps = np.asarray(eps, dtype=float)
    if math.isinf(beta):
        return np.where(eps > 0, 0.0, np.where(eps < 0, 1.0, 0.5))
    return expit(-beta * eps)


def step(x, at_zero: float = 0.5):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, 1.0, np.where(x < 0, 0.0, at_zero))


def _retarded(eps: float, beta: float, x, at_zero: float):
    x = np.asarray(x, dtype=float)
    theta = step(x, at_zero)
    # the two pieces are kept apart so beta -> inf never forms 0 * inf
    causal = np.where(theta > 0, theta * np.exp(-eps * np.where(theta > 0, x, 0.0)), 0.0)
    if math.isinf(beta):
        return causal
    thermal = np.exp(-eps * x - np.logaddexp(0.0, beta * eps))
    return causal - thermal


def greens_retarded(spec: PropagatorSpec, tau, tau_prime=0.0):
    """
    G+(tau, tau') = [Theta(tau - tau') - (1 + e^{beta eps})^{-1}] e^{-eps (tau - tau')}.

    Theta(0) follows the prescription (1/2 when symmetric). At beta = inf the thermal
    term is dropped. Vectorized over tau and tau'.
    """
    value = _retarded(spec.eps, spec.beta, np.subtract(tau, tau_prime), spec.prescription.step_at_zero)
    return float(value) if np.ndim(value) == 0 else value


def greens_advanced(spec: PropagatorSpec, tau, tau_prime=0.0):
    """G-(tau, tau') = -G+(tau', tau)."""
    return -greens_retarded(spec, tau_prime, tau)


def mode_greens(eps, x, beta: float = math.inf) -> Tuple[np.ndarray, np.ndarray]:
    """(G+(x), G-(x)) for an array of mode energies, symmetric prescription."""
    eps = np.asarray(eps, dtype=float)
    return _retarded(eps, beta, x, 0.5), -_retarded(eps, beta, -x, 0.5)


def realtime_phase(eps, t):
    """Wick-rotated propagator phase e^{-i|t|eps}."""
    value = np.exp(-1j * np.abs(t) * np.asarray(eps))
    return complex(value) if np.ndim(value) == 0 else value


def greens_finite_difference(eps: float, beta: float, x: float, n_points: int = 4000) -> float:
    """
    Dense Crank-Nicolson solve of (d/dtau + eps) G = delta with G(tau - beta) = -G(tau).

    Nodes tau_j = j * beta / n on [0, beta); the unit jump at tau = 0 closes the
    antiperiodic wrap. Values for -beta < x < 0 come from antiperiodicity. Used as an
    independent check of greens_retarded.
    """
    if not -beta < x < beta or x == 0:
        raise ValueError(f"x must lie in (-beta, beta) away from 0, got {x}")
    sign = 1.0
    if x < 0:
        x, sign = x + beta, -1.0

    delta = beta / n_points
    lower = 1.0 / delta + 0.5 * eps
    upper = 1.0 / delta - 0.5 * eps
    matrix = np.zeros((n_points, n_points))
    rhs = np.zeros(n_points)
    for j in range(n_points - 1):
        matrix[j, j + 1] = lower
        matrix[j, j] = -upper
    # jump row: g_0 + rho * g_{n-1} = 1
    matrix[n_points - 1, 0] = 1.0
    matrix[n_points - 1, n_points - 1] = upper / lower
    rhs[n_points - 1] = 1.0

    values = solve(matrix, rhs)
    nodes = delta * np.arange(n_points)
    return sign * float(np.interp(x, nodes, values))


def integrated_occupation(omega: float, beta: float) -> float:
    """Closed form of int_0^omega (1 + e^{beta x})^{-1} dx."""
    return omega - (np.logaddexp(0.0, beta * omega) - math.log(2.0)) / beta


def oscillator_log_det(omega: float, beta: float, prescription: Prescription) -> float:
    """
    log Det(d/dtau + omega) = log 2 + beta * int_0^omega G_w(tau, tau) dw.

    The equal-time value is 1/2 - n_F (symmetric) or -n_F (asymmetric); the
    integral is taken in closed form.
    """
    occupation = integrated_occupation(omega, beta)
    integral = prescription.step_at_zero * omega - occupation
    return math.log(2.0) + beta * integral


def oscillator_partition(omega: float, beta: float,
                         prescription: Prescription = Prescription.SYMMETRIC,
                         with_prefactor: bool = False) -> float:
    """
    Two-level oscillator partition function from the determinant formula.

    Symmetric gives 2 cosh(beta*omega/2); asymmetric gives the bare value
    1 + e^{-beta*omega}. ``with_prefactor`` multiplies by e^{beta*omega/2}, which
    corrects the asymmetric value and spoils the symmetric one.
    """
    log_z = oscillator_log_det(omega, beta, prescription)
    if with_prefactor:
        log_z += 0.5 * beta * omega
    return math.exp(log_z)


def two_level_trace(omega: float, beta: float) -> float:
    """Tr e^{-beta H} for H = omega (n - 1/2)."""
    return 2.0 * math.cosh(0.5 * beta * omega)


def prescription_table(pairs: Iterable[Tuple[float, float]]) -> List[Dict[str, float]]:
    """Symmetric vs. asymmetric partition functions for each (omega, beta)."""
    rows = []
    for omega, beta in pairs:
        exact = two_level_trace(omega, beta)
        symmetric = oscillator_partition(omega, beta, Prescription.SYMMETRIC)
        rows.append({
            'omega': omega,
            'beta': beta,
            'symmetric': symmetric,
            'asymmetric_bare': oscillator_partition(omega, beta, Prescription.ASYMMETRIC),
            'asymmetric_prefactor': oscillator_partition(omega, beta, Prescription.ASYMMETRIC,
                                                         with_prefactor=True),
            'mismatched': oscillator_partition(omega, beta, Prescription.SYMMETRIC,
                                               with_prefactor=True),
            'exact_trace': exact,
            'symmetric_abs_diff': abs(symmetric - exact),
        })
    logger.debug(f"Prescription table with {len(rows)} rows")
    return rows
