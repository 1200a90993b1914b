"""Shared numeric kernel: composite Gauss-Legendre quadrature, Bessel J by Miller
recurrence and the dense linear algebra used across the package."""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .error_handler import ConvergenceError, CovarianceError
from .utils import setup_module_logger

logger = setup_module_logger(__name__)

GAUSS_ORDER = 16
DEFAULT_MAX_PANELS = 65536

Number = Union[float, complex]


@dataclass(frozen=True)
class QuadratureResult:
    """Outcome of a panel-doubling quadrature."""
    value: Number
    est_error: float
    panels: int
    converged: bool = True


@lru_cache(maxsize=4)
def _gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _composite_rule(f: Callable, a: float, b: float, panels: int) -> Number:
    nodes, weights = _gauss_legendre(GAUSS_ORDER)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    fx = np.asarray(f(x))
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    w = (half[:, None] * weights[None, :]).ravel()
    return np.sum(w * fx)


def _integrate_segment(f, a, b, tol, panels, max_panels):
    previous = _composite_rule(f, a, b, panels)
    while True:
        if 2 * panels > max_panels:
            return previous, np.inf, panels, False
        panels *= 2
        current = _composite_rule(f, a, b, panels)
        delta = abs(current - previous)
        if delta < tol:
            return current, float(delta), panels, True
        previous = current


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float = 1e-12,
              panels: int = 1, max_panels: int = DEFAULT_MAX_PANELS,
              breakpoints: Optional[Sequence[float]] = None) -> QuadratureResult:
    """
    Composite Gauss-Legendre quadrature (order 16 per panel) with global panel doubling.

    The integrand must accept a 1-D array of abscissae. Interior ``breakpoints`` split
    the interval so kinks and jumps sit on panel edges. ``est_error`` is the last
    doubling difference summed over segments; when the panel cap is reached the best
    estimate is returned with ``converged=False``.
    """
    cuts = [a]
    if breakpoints:
        lo, hi = min(a, b), max(a, b)
        inner = sorted(p for p in breakpoints if lo < p < hi)
        cuts.extend(inner if b >= a else inner[::-1])
    cuts.append(b)

    total = 0.0
    total_error = 0.0
    total_panels = 0
    converged = True
    seg_tol = tol / (len(cuts) - 1)
    for left, right in zip(cuts[:-1], cuts[1:]):
        value, err, used, ok = _integrate_segment(f, left, right, seg_tol, max(1, panels), max_panels)
        total = total + value
        total_error += err
        total_panels += used
        converged = converged and ok

    if not converged:
        logger.warning(f"Quadrature on [{a}, {b}] hit the panel cap {max_panels}")
    if isinstance(total, np.generic):
        total = total.item()
    return QuadratureResult(value=total, est_error=float(total_error), panels=total_panels,
                            converged=converged)


def _miller_start(k: int, x: float) -> int:
    scale = max(k, abs(x))
    start = int(scale + 30 + np.sqrt(60.0 * scale))
    return start + (start % 2)


def bessel_j_sequence(k_max: int, x: float) -> np.ndarray:
    """
    J_0(x) ... J_{k_max}(x) by downward (Miller) recurrence.

    The recurrence J_{k-1} = (2k/x) J_k - J_{k+1} is run from an even start index well
    above max(k_max, |x|), rescaled on overflow, and normalized with
    J_0 + 2 * sum_m J_{2m} = 1.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    x = float(x)
    out = np.zeros(k_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out

    sign_flip = x < 0
    ax = abs(x)
    start = _miller_start(k_max, ax)
    values = np.zeros(start + 2)
    values[start] = 1e-300
    for k in range(start, 0, -1):
        values[k - 1] = (2.0 * k / ax) * values[k] - values[k + 1]
        if abs(values[k - 1]) > 1e250:
            values[k - 1:] *= 1e-250

    norm = values[0] + 2.0 * np.sum(values[2:start + 1:2])
    out[:] = values[:k_max + 1] / norm
    if sign_flip:
        out[1::2] *= -1.0
    return out


def bessel_j(k: int, x: float) -> float:
    """J_k(x) for integer k; negative orders via J_{-k} = (-1)^k J_k."""
    k = int(k)
    if k < 0:
        return (-1.0) ** k * bessel_j(-k, x)
    return float(bessel_j_sequence(k, x)[k])


def lu_det(matrix: np.ndarray) -> Number:
    """Determinant from an LU factorization with partial pivoting."""
    lu, piv = scipy.linalg.lu_factor(np.asarray(matrix))
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    det = np.prod(np.diag(lu))
    return -det if swaps % 2 else det


def lu_logdet(matrix: np.ndarray) -> complex:
    """Principal-branch log-determinant, safe where the determinant over/underflows."""
    lu, piv = scipy.linalg.lu_factor(np.asarray(matrix))
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    diag = np.diag(lu).astype(complex)
    value = np.sum(np.log(diag)) + (1j * np.pi if swaps % 2 else 0.0)
    # fold the imaginary part back to (-pi, pi]
    return complex(value.real, np.angle(np.exp(1j * value.imag)))


def solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Dense linear solve; singular systems surface as ConvergenceError."""
    try:
        return scipy.linalg.solve(matrix, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceError(f"Dense solve failed: {e}")


def eig_antisym(gamma: np.ndarray, pairing_tol: float = 1e-10) -> np.ndarray:
    """
    Nonnegative half-spectrum of i*gamma for a real antisymmetric gamma.

    Returns:
        Ascending array of nu_k >= 0, one per +/- pair

    Raises:
        CovarianceError: If the spectrum is not paired within
            pairing_tol * max(1, ||gamma||)
    """
    gamma = np.asarray(gamma, dtype=float)
    n = gamma.shape[0]
    if gamma.shape != (n, n) or n % 2:
        raise CovarianceError(f"Expected an even square matrix, got shape {gamma.shape}")

    eigenvalues = scipy.linalg.eigvalsh(1j * gamma)
    scale = max(1.0, float(np.linalg.norm(gamma, 2)))
    mismatch = np.max(np.abs(eigenvalues + eigenvalues[::-1]))
    if mismatch > pairing_tol * scale:
        raise CovarianceError(f"Spectrum of i*gamma is not +/- paired (mismatch {mismatch:.3e})")
    return np.abs(eigenvalues[n // 2:])


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """
    Least-squares slope of log|y| against log x.

    Returns:
        (slope, intercept, rms residual)
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.abs(np.asarray(y, dtype=float)))
    design = np.vstack([lx, np.ones_like(lx)]).T
    coeffs, *_ = np.linalg.lstsq(design, ly, rcond=None)
    residual = ly - design @ coeffs
    return float(coeffs[0]), float(coeffs[1]), float(np.sqrt(np.mean(residual ** 2)))
