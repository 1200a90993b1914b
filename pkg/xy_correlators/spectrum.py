"""Momentum grid, dispersion and branch-resolved Bogoliubov angles of the XY chain."""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, NamedTuple

import numpy as np

from .error_handler import SectorMismatchError, SingularPointError
from .utils import setup_module_logger

logger = setup_module_logger(__name__)

GAPLESS_THRESHOLD = 1e-14


@dataclass(frozen=True)
class ChainParams:
    """
    Static chain description.

    Bond couplings are a = (1+r)/2 on sigma^x sigma^x and b = (1-r)/2 on
    sigma^y sigma^y; h is the uniform transverse field. Only even chains are
    accepted, matching the antiperiodic Fourier sector.
    """
    n_sites: int
    r: float
    h: float

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites <= 0:
            raise SectorMismatchError(f"n_sites must be a positive integer, got {self.n_sites}")
        if self.n_sites % 2:
            raise SectorMismatchError(
                f"n_sites={self.n_sites} is odd; only the antiperiodic (even-parity) sector is implemented")
        if not (np.isfinite(self.r) and np.isfinite(self.h)):
            raise ValueError(f"r and h must be finite, got r={self.r}, h={self.h}")

    def with_field(self, h: float) -> 'ChainParams':
        return ChainParams(self.n_sites, self.r, h)


@dataclass(frozen=True)
class Mode:
    """One momentum sector: phi = 2*pi*(m + 1/2)/N."""
    m: int
    phi: float
    k: float
    l: float
    eps: float
    theta: float


class ModeArrays(NamedTuple):
    """Column view of a mode set, read-only."""
    phi: np.ndarray
    k: np.ndarray
    l: np.ndarray
    eps: np.ndarray
    theta: np.ndarray


def momenta(n_sites: int) -> np.ndarray:
    return 2.0 * np.pi * (np.arange(n_sites) + 0.5) / n_sites


def dispersion_continuum(h, r, phi):
    """eps(phi) = 2 sqrt((h - cos phi)^2 + (r sin phi)^2); vectorized over phi."""
    return 2.0 * np.hypot(h - np.cos(phi), r * np.sin(phi))


def two_theta_unchecked(h, r, phi):
    """
    Branch-resolved 2*theta reduced to [-pi/2, 3pi/2), vectorized.

    No gapless check; at eps = 0 the value is whatever atan2(0, 0) gives. Meant for
    integrands where isolated gapless points carry zero measure.
    """
    two_theta = np.arctan2(r * np.sin(phi), h - np.cos(phi))
    return np.where(two_theta < -0.5 * np.pi, two_theta + 2.0 * np.pi, two_theta)


def bogoliubov_angle(h: float, r: float, phi: float) -> float:
    """
    Bogoliubov angle theta(phi) with 2*theta in [-pi/2, 3pi/2).

    For h - cos(phi) > 0, 2*theta lies in (-pi/2, pi/2); for h - cos(phi) < 0 it lies
    in (pi/2, 3pi/2). cos 2theta = 2k/eps and sin 2theta = 2l/eps.

    Raises:
        SingularPointError: At a gapless point, where the angle is undefined
    """
    eps = dispersion_continuum(h, r, phi)
    if eps < GAPLESS_THRESHOLD * max(1.0, abs(h)):
        raise SingularPointError(f"Gapless point at h={h}, r={r}, phi={phi}: Bogoliubov angle undefined")
    return float(0.5 * two_theta_unchecked(h, r, phi))


def _check_gapless(params: ChainParams, eps: np.ndarray, phi: np.ndarray) -> None:
    gapless = np.flatnonzero(eps < GAPLESS_THRESHOLD * max(1.0, abs(params.h)))
    if gapless.size:
        m = int(gapless[0])
        raise SingularPointError(
            f"Mode m={m} (phi={phi[m]:.15g}) is gapless for {params}; Bogoliubov angle undefined")


@lru_cache(maxsize=64)
def mode_arrays(params: ChainParams) -> ModeArrays:
    """
    Vectorized mode set for the antiperiodic sector.

    Raises:
        SingularPointError: If any discrete mode is gapless (r = 0 with h = cos phi_m)
    """
    phi = momenta(params.n_sites)
    k = params.h - np.cos(phi)
    l = params.r * np.sin(phi)
    eps = 2.0 * np.hypot(k, l)
    _check_gapless(params, eps, phi)
    theta = 0.5 * two_theta_unchecked(params.h, params.r, phi)

    arrays = ModeArrays(phi, k, l, eps, theta)
    for column in arrays:
        column.setflags(write=False)
    logger.debug(f"Built {params.n_sites} modes, eps in [{eps.min():.3e}, {eps.max():.3e}]")
    return arrays


def mode_set(params: ChainParams) -> List[Mode]:
    """All N modes phi_m = 2*pi*(m + 1/2)/N, m = 0..N-1."""
    arrays = mode_arrays(params)
    return [
        Mode(m=m, phi=float(arrays.phi[m]), k=float(arrays.k[m]), l=float(arrays.l[m]),
             eps=float(arrays.eps[m]), theta=float(arrays.theta[m]))
        for m in range(params.n_sites)
    ]


def bogoliubov_matrix(theta: float) -> np.ndarray:
    """U(theta) = [[cos, i sin], [i sin, cos]]; U^dagger H_m U = diag(eps, -eps)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]])


def mode_hamiltonian(k: float, l: float) -> np.ndarray:
    """Per-mode 2x2 block H_m = 2 [[k, -i l], [i l, -k]] with eigenvalues +/- eps."""
    return 2.0 * np.array([[k, -1j * l], [1j * l, -k]])


def ground_energy(params: ChainParams) -> float:
    """Ground energy of the even-parity sector, -(1/2) sum_m eps_m."""
    return float(-0.5 * np.sum(mode_arrays(params).eps))
