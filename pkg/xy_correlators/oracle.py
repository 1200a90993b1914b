"""Brute-force references: dense exact diagonalization of the spin chain, numeric
Bogoliubov-de Gennes solution of the mode blocks, and the two-spin toy model."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .dynamic_correlators import majorana_correlator, zz_connected_time
from .error_handler import OracleError
from .propagators import mode_greens
from .spectrum import ChainParams, ground_energy, mode_hamiltonian, momenta
from .static_correlators import FermionKind, transverse_magnetization
from .utils import setup_module_logger

logger = setup_module_logger(__name__)

MAX_SITES = 12
DEGENERACY_TOL = 1e-10


class Boundary(Enum):
    PERIODIC = "periodic"
    OPEN = "open"


@dataclass(frozen=True)
class SpinChainSpec:
    """
    H = -sum_j [a_j X_j X_{j+1} + b_j Y_j Y_{j+1} + c_j Z_j Z_{j+1}] - sum_j h_j Z_j.

    Bond j couples sites j and j+1 (mod n when periodic).
    """
    n: int
    a: Tuple[float, ...]
    b: Tuple[float, ...]
    c: Tuple[float, ...]
    h: Tuple[float, ...]
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if not 1 <= self.n <= MAX_SITES:
            raise OracleError(f"exact diagonalization supports 1 <= n <= {MAX_SITES}, got n={self.n}")
        if self.boundary is Boundary.PERIODIC and self.n < 3:
            raise OracleError("periodic chains need n >= 3; use the open boundary")
        bonds = self.n if self.boundary is Boundary.PERIODIC else self.n - 1
        for name in ('a', 'b', 'c'):
            if len(getattr(self, name)) != bonds:
                raise OracleError(f"{name} has {len(getattr(self, name))} entries, expected {bonds}")
        if len(self.h) != self.n:
            raise OracleError(f"h has {len(self.h)} entries, expected {self.n}")

    @classmethod
    def xy(cls, n: int, r: float, h: float, boundary: Boundary = Boundary.PERIODIC) -> 'SpinChainSpec':
        bonds = n if boundary is Boundary.PERIODIC else n - 1
        return cls(n=n, a=((1.0 + r) / 2.0,) * bonds, b=((1.0 - r) / 2.0,) * bonds,
                   c=(0.0,) * bonds, h=(float(h),) * n, boundary=boundary)

    def bonds(self) -> List[Tuple[int, int, float, float, float]]:
        count = len(self.a)
        return [(j, (j + 1) % self.n, self.a[j], self.b[j], self.c[j]) for j in range(count)]


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    parity: np.ndarray
    n: int


def _spin_z(states: np.ndarray, site: int) -> np.ndarray:
    # bit 0 is spin up
    return 1.0 - 2.0 * ((states >> site) & 1)


def build_hamiltonian(spec: SpinChainSpec) -> np.ndarray:
    """Dense 2^n Hamiltonian in the sigma^z product basis, bit j = site j."""
    dim = 2 ** spec.n
    states = np.arange(dim)
    matrix = np.zeros((dim, dim), dtype=complex)
    diagonal = np.zeros(dim)
    for site in range(spec.n):
        diagonal -= spec.h[site] * _spin_z(states, site)
    for j, k, a, b, c in spec.bonds():
        diagonal -= c * _spin_z(states, j) * _spin_z(states, k)
        flipped = states ^ ((1 << j) | (1 << k))
        equal = ((states >> j) & 1) == ((states >> k) & 1)
        np.add.at(matrix, (flipped, states), np.where(equal, -(a - b), -(a + b)))
    matrix[states, states] += diagonal
    return matrix


def parity_of(states: np.ndarray) -> np.ndarray:
    """Eigenvalue of prod_j Z_j, +1 for an even number of down spins."""
    counts = np.array([bin(int(s)).count('1') for s in states])
    return np.where(counts % 2 == 0, 1, -1)


def ed_build_and_diagonalize(spec: SpinChainSpec) -> SpectralData:
    """Parity-resolved dense diagonalization; eigenvalues ascending across both sectors."""
    matrix = build_hamiltonian(spec)
    hermiticity = float(np.max(np.abs(matrix - matrix.conj().T)))
    if hermiticity > 1e-12:
        raise OracleError(f"Hamiltonian not Hermitian (deviation {hermiticity:.3e})")

    dim = 2 ** spec.n
    labels = parity_of(np.arange(dim))
    values, vectors, parity = [], [], []
    for sector in (1, -1):
        index = np.flatnonzero(labels == sector)
        if index.size == 0:
            continue
        block_values, block_vectors = scipy.linalg.eigh(matrix[np.ix_(index, index)])
        full = np.zeros((dim, index.size), dtype=complex)
        full[index, :] = block_vectors
        values.append(block_values)
        vectors.append(full)
        parity.append(np.full(index.size, sector))

    values = np.concatenate(values)
    order = np.argsort(values, kind='stable')
    logger.debug(f"ED n={spec.n}: ground energy {values[order[0]]:.12g}")
    return SpectralData(eigenvalues=values[order], eigenvectors=np.concatenate(vectors, axis=1)[:, order],
                        parity=np.concatenate(parity)[order], n=spec.n)


def select_states(data: SpectralData, selection: str = 'even',
                  beta: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    (weights, state indices) for 'ground', 'even' (lowest even-parity state),
    'degenerate' (equiprobable ground multiplet) or 'thermal' (needs beta).
    """
    if selection == 'ground':
        return np.array([1.0]), np.array([0])
    if selection == 'even':
        return np.array([1.0]), np.array([int(np.flatnonzero(data.parity == 1)[0])])
    if selection == 'degenerate':
        multiplet = np.flatnonzero(data.eigenvalues - data.eigenvalues[0] <= DEGENERACY_TOL)
        return np.full(multiplet.size, 1.0 / multiplet.size), multiplet
    if selection == 'thermal':
        if beta is None or not beta > 0:
            raise OracleError("thermal selection needs beta > 0")
        logw = -beta * (data.eigenvalues - data.eigenvalues[0])
        weights = np.exp(logw - np.logaddexp.reduce(logw))
        return weights, np.arange(len(weights))
    raise OracleError(f"unknown state selection '{selection}'")


PauliString = Union[str, Mapping[int, str]]


def parse_pauli(observable: PauliString) -> Dict[int, str]:
    """'z4 z5' or {4: 'z', 5: 'z'} -> {site: letter}."""
    if isinstance(observable, Mapping):
        ops = {int(k): str(v).lower() for k, v in observable.items()}
    else:
        ops = {}
        for token in observable.replace(',', ' ').split():
            ops[int(token[1:])] = token[0].lower()
    for letter in ops.values():
        if letter not in ('x', 'y', 'z'):
            raise OracleError(f"unknown Pauli letter '{letter}'")
    return ops


def apply_pauli(vectors: np.ndarray, n: int, observable: PauliString) -> np.ndarray:
    """Pauli string applied to the columns of ``vectors``."""
    result = np.array(vectors, dtype=complex, copy=True)
    states = np.arange(2 ** n)
    for site, letter in sorted(parse_pauli(observable).items()):
        if not 0 <= site < n:
            raise OracleError(f"site {site} outside chain of {n}")
        bit = (states >> site) & 1
        if letter == 'z':
            result = result * (1.0 - 2.0 * bit)[:, None]
            continue
        phase = np.ones(len(states), dtype=complex) if letter == 'x' else 1j * (1.0 - 2.0 * bit)
        moved = np.zeros_like(result)
        moved[states ^ (1 << site)] = phase[:, None] * result
        result = moved
    return result


def ed_expectation(spec: SpinChainSpec, observable: PauliString, selection: str = 'even',
                   beta: Optional[float] = None, data: Optional[SpectralData] = None) -> float:
    """Exact <O> in the selected state."""
    data = data or ed_build_and_diagonalize(spec)
    weights, index = select_states(data, selection, beta)
    vectors = data.eigenvectors[:, index]
    values = np.einsum('ij,ij->j', vectors.conj(), apply_pauli(vectors, spec.n, observable))
    value = complex(np.sum(weights * values))
    if abs(value.imag) > 1e-10:
        logger.warning(f"<{observable}> has imaginary part {value.imag:.3e}")
    return value.real


def ed_correlation_time(spec: SpinChainSpec, first: PauliString, second: PauliString, t: float,
                        selection: str = 'even', data: Optional[SpectralData] = None) -> complex:
    """
    <O_first(t) O_second(0)> = sum_n e^{i(E_0 - E_n) t} <0|O_first|n><n|O_second|0>
    for a pure selection, by spectral decomposition.
    """
    data = data or ed_build_and_diagonalize(spec)
    _, index = select_states(data, selection)
    if len(index) != 1:
        raise OracleError("real-time correlations need a pure state selection")
    ground = data.eigenvectors[:, index]
    energy = data.eigenvalues[index[0]]
    right = data.eigenvectors.conj().T @ apply_pauli(ground, spec.n, second)
    # Pauli strings are Hermitian: <0|O|n> = conj(<n|O|0>)
    left = data.eigenvectors.conj().T @ apply_pauli(ground, spec.n, first)
    phases = np.exp(1j * (energy - data.eigenvalues) * t)
    return complex(np.sum(left.conj()[:, 0] * phases * right[:, 0]))


def ed_zz_connected(spec: SpinChainSpec, site_a: int, site_b: int, t: float = 0.0,
                    selection: str = 'even', data: Optional[SpectralData] = None) -> complex:
    data = data or ed_build_and_diagonalize(spec)
    full = ed_correlation_time(spec, {site_a: 'z'}, {site_b: 'z'}, t, selection, data)
    mean_a = ed_expectation(spec, {site_a: 'z'}, selection, data=data)
    mean_b = ed_expectation(spec, {site_b: 'z'}, selection, data=data)
    return full - mean_a * mean_b


def majorana_string(start: int, l: int) -> Dict[int, str]:
    """
    Pauli string of (c^dag - c)_{j+l} (c^dag + c)_j after Jordan-Wigner, with
    Z_j = 1 - 2 n_j; l = 0 gives -Z_j (sign applied by the caller).
    """
    if l == 0:
        return {start: 'z'}
    letter = 'y' if l > 0 else 'x'
    first, last = start, start + abs(l)
    ops = {site: 'z' for site in range(first + 1, last)}
    ops[first] = letter
    ops[last] = letter
    return ops


def ed_majorana_correlator(spec: SpinChainSpec, l: int, selection: str = 'even',
                           data: Optional[SpectralData] = None) -> float:
    """Equal-time B_l from the exact state, sites kept inside the chain."""
    start = 0
    if abs(l) >= spec.n:
        raise OracleError(f"|l|={abs(l)} does not fit a chain of {spec.n}")
    value = ed_expectation(spec, majorana_string(start, l), selection, data=data)
    return -value if l == 0 else value


def reduced_density_matrix(spec: SpinChainSpec, block_length: int, selection: str = 'even',
                           beta: Optional[float] = None, data: Optional[SpectralData] = None) -> np.ndarray:
    """Density matrix of sites 0..L-1."""
    if not 1 <= block_length <= spec.n:
        raise OracleError(f"block length {block_length} outside [1, {spec.n}]")
    data = data or ed_build_and_diagonalize(spec)
    weights, index = select_states(data, selection, beta)
    size = 2 ** block_length
    rho = np.zeros((size, size), dtype=complex)
    for weight, column in zip(weights, index):
        grid = data.eigenvectors[:, column].reshape(-1, size)
        rho += weight * grid.T @ grid.conj()
    return rho


def ed_block_entropy(spec: SpinChainSpec, block_length: int, selection: str = 'even',
                     beta: Optional[float] = None, data: Optional[SpectralData] = None) -> float:
    """Von Neumann entropy of the block in nats."""
    probabilities = np.clip(scipy.linalg.eigvalsh(reduced_density_matrix(spec, block_length, selection,
                                                                         beta, data)), 0.0, 1.0)
    nonzero = probabilities[probabilities > 0]
    return float(-np.sum(nonzero * np.log(nonzero)))


@dataclass(frozen=True)
class BdgMode:
    m: int
    eps_num: float
    theta_num: float
    cos2: float
    sin2: float
    sin_two: float
    unitary: np.ndarray
    unitarity_residual: float


def bdg_mode_solve(params: ChainParams, m: int) -> BdgMode:
    """Numeric eigendecomposition of the 2x2 block H_m; no analytic angle is used."""
    phi = float(momenta(params.n_sites)[m])
    block = mode_hamiltonian(params.h - math.cos(phi), params.r * math.sin(phi))
    values, vectors = np.linalg.eigh(block)
    upper = vectors[:, 1]
    # fix the phase so the first component is real and nonnegative
    if abs(upper[0]) > 1e-15:
        upper = upper * np.exp(-1j * np.angle(upper[0]))
    else:
        upper = upper * np.exp(-1j * (np.angle(upper[1]) - 0.5 * np.pi))
    cos2, sin2 = float(abs(upper[0]) ** 2), float(abs(upper[1]) ** 2)
    sin_two = float(-2.0 * np.imag(upper[0] * np.conj(upper[1])))
    two_theta = math.atan2(sin_two, cos2 - sin2)
    if two_theta < -0.5 * math.pi:
        two_theta += 2.0 * math.pi
    # U = [[c, i s], [i s, c]]
    unitary = np.column_stack([upper, [upper[1], upper[0]]])
    residual = float(np.max(np.abs(unitary.conj().T @ unitary - np.eye(2))))
    return BdgMode(m=m, eps_num=float(values[1]), theta_num=0.5 * two_theta, cos2=cos2, sin2=sin2,
                   sin_two=sin_two, unitary=unitary, unitarity_residual=residual)


def bdg_modes(params: ChainParams) -> List[BdgMode]:
    return [bdg_mode_solve(params, m) for m in range(params.n_sites)]


def bdg_fermion_two_point(params: ChainParams, kind: FermionKind, b: int, a: int,
                          tau2: float, tau1: float, beta: float = math.inf) -> complex:
    """The four time-ordered fermion correlators rebuilt from numeric BdG weights."""
    modes = bdg_modes(params)
    phi = momenta(params.n_sites)
    eps = np.array([mode.eps_num for mode in modes])
    cos2 = np.array([mode.cos2 for mode in modes])
    sin2 = np.array([mode.sin2 for mode in modes])
    sin_two = np.array([mode.sin_two for mode in modes])
    phase = np.exp(1j * phi * (b - a)) / params.n_sites
    forward = tau2 - tau1

    if kind in (FermionKind.PSI_PSI_DAGGER, FermionKind.PSI_PSI):
        g_plus, g_minus = mode_greens(eps, forward, beta)
    else:
        g_plus, g_minus = mode_greens(eps, -forward, beta)
    if kind is FermionKind.PSI_PSI_DAGGER:
        value = np.sum(phase * (cos2 * g_plus + sin2 * g_minus))
    elif kind is FermionKind.PSI_DAGGER_PSI:
        value = -np.sum(phase * (cos2 * g_plus + sin2 * g_minus))
    elif kind is FermionKind.PSI_DAGGER_PSI_DAGGER:
        value = 0.5j * np.sum(phase * sin_two * (g_plus - g_minus))
    else:
        value = -0.5j * np.sum(phase * sin_two * (g_plus - g_minus))
    if kind in (FermionKind.PSI_PSI_DAGGER, FermionKind.PSI_DAGGER_PSI) and a == b and tau1 == tau2:
        value += 0.5
    return complex(value)


def bdg_majorana_correlator(params: ChainParams, l: int) -> float:
    """-(1/N) sum_m e^{i phi l} (cos 2theta - i sin 2theta) from numeric eigenvectors."""
    modes = bdg_modes(params)
    phi = momenta(params.n_sites)
    weights = np.array([mode.cos2 - mode.sin2 - 1j * mode.sin_two for mode in modes])
    return float(np.real(-np.mean(np.exp(1j * phi * l) * weights)))


def bdg_ground_energy(params: ChainParams) -> float:
    return -0.5 * sum(mode.eps_num for mode in bdg_modes(params))


# toy model: H = -omega S_1 . S_2

def toy_spin_spec(omega: float) -> SpinChainSpec:
    quarter = omega / 4.0
    return SpinChainSpec(n=2, a=(quarter,), b=(quarter,), c=(quarter,), h=(0.0, 0.0), boundary=Boundary.OPEN)


def fock_operators() -> Tuple[np.ndarray, np.ndarray]:
    """Annihilators c_1, c_2 on the 4-dim Fock space |n_1 n_2>."""
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])
    sign = np.diag([1.0, -1.0])
    return np.kron(lower, np.eye(2)), np.kron(sign, lower)


def toy_fermion_hamiltonian(omega: float) -> np.ndarray:
    """-(omega/4) [2 (c1^dag c2 + c2^dag c1) + (1 - 2 n1)(1 - 2 n2)]."""
    c1, c2 = fock_operators()
    n1, n2 = c1.T @ c1, c2.T @ c2
    identity = np.eye(4)
    hopping = c1.T @ c2 + c2.T @ c1
    return -(omega / 4.0) * (2.0 * hopping + (identity - 2.0 * n1) @ (identity - 2.0 * n2))


def toy_closed_form(omega: float, beta: float) -> float:
    return math.exp(-0.75 * beta * omega) + 3.0 * math.exp(0.25 * beta * omega)


def toy_model_check(omega: float, beta: float) -> Dict[str, float]:
    """Partition function of the two-spin model from the spin and the fermion Fock traces."""
    spin_levels = scipy.linalg.eigvalsh(build_hamiltonian(toy_spin_spec(omega)))
    fermion_levels = scipy.linalg.eigvalsh(toy_fermion_hamiltonian(omega))
    z_spin = float(np.sum(np.exp(-beta * spin_levels)))
    z_fermion = float(np.sum(np.exp(-beta * fermion_levels)))
    z_closed = toy_closed_form(omega, beta)
    return {
        'omega': omega, 'beta': beta, 'z_spin': z_spin, 'z_fermion': z_fermion,
        'z_closed_form': z_closed,
        'diff': max(abs(z_spin - z_closed), abs(z_fermion - z_closed)),
    }


def oracle_rows(params: ChainParams, l_values: Sequence[int], t: float = 0.0) -> List[Dict]:
    """Side-by-side formula, ED and BdG values for a small chain (even-parity ground state)."""
    spec = SpinChainSpec.xy(params.n_sites, params.r, params.h)
    data = ed_build_and_diagonalize(spec)
    even_energy = float(data.eigenvalues[np.flatnonzero(data.parity == 1)[0]])
    rows = [
        _row('ground_energy', ground_energy(params), even_energy, bdg_ground_energy(params)),
        _row('sigma_z', transverse_magnetization(params), ed_expectation(spec, 'z0', data=data),
             -bdg_majorana_correlator(params, 0)),
    ]
    for l in l_values:
        rows.append(_row(f'B_{l}', majorana_correlator(params, l, 0.0).value.real,
                         ed_majorana_correlator(spec, l, data=data), bdg_majorana_correlator(params, l)))
        if l > 0:
            formula = zz_connected_time(params, l, t).value
            ed_value = ed_zz_connected(spec, 0, l % params.n_sites, t, data=data)
            rows.append(_row(f'zz_{l}(t={t:g})', complex(formula).real, ed_value.real, None))
    return rows


def _row(quantity: str, formula: float, ed: float, bdg: Optional[float]) -> Dict:
    return {
        'quantity': quantity, 'formula': formula, 'ed': ed,
        'bdg': math.nan if bdg is None else bdg,
        'ed_diff': abs(formula - ed),
        'bdg_diff': math.nan if bdg is None else abs(formula - bdg),
    }
