import math

import numpy as np
import pytest

from xy_correlators.dynamic_correlators import majorana_correlator, zz_connected_time
from xy_correlators.error_handler import OracleError
from xy_correlators.oracle import (Boundary, SpinChainSpec, bdg_fermion_two_point, bdg_ground_energy,
                                   bdg_majorana_correlator, bdg_modes, build_hamiltonian,
                                   ed_build_and_diagonalize, ed_expectation, ed_majorana_correlator,
                                   ed_zz_connected, majorana_string, oracle_rows, parse_pauli,
                                   select_states, toy_closed_form, toy_model_check)
from xy_correlators.spectrum import ChainParams, ground_energy, mode_arrays
from xy_correlators.static_correlators import FermionKind, fermion_two_point, transverse_magnetization

TOY_PAIRS = [(omega, beta) for omega in (0.5, 1.0, 2.0, 4.0, 8.0) for beta in (0.25, 1.0)]


class TestBdgEquivalence:
    def test_mode_energies_and_angles(self, parameter_set):
        modes = mode_arrays(parameter_set)
        numeric = bdg_modes(parameter_set)
        np.testing.assert_allclose([mode.eps_num for mode in numeric], modes.eps, atol=1e-12)
        np.testing.assert_allclose([mode.cos2 for mode in numeric], np.cos(modes.theta) ** 2, atol=1e-12)
        np.testing.assert_allclose([mode.sin2 for mode in numeric], np.sin(modes.theta) ** 2, atol=1e-12)
        np.testing.assert_allclose([mode.sin_two for mode in numeric], np.sin(2 * modes.theta), atol=1e-12)
        np.testing.assert_allclose([mode.theta_num for mode in numeric], modes.theta, atol=1e-12)

    def test_unitary(self, parameter_set):
        assert max(mode.unitarity_residual for mode in bdg_modes(parameter_set)) < 1e-13

    @pytest.mark.parametrize("l", [-2, -1, 0, 1, 3])
    def test_majorana_correlator(self, parameter_set, l):
        formula = complex(majorana_correlator(parameter_set, l, 0.0).value).real
        assert bdg_majorana_correlator(parameter_set, l) == pytest.approx(formula, abs=1e-12)

    def test_ground_energy(self, parameter_set):
        assert bdg_ground_energy(parameter_set) == pytest.approx(ground_energy(parameter_set), abs=1e-12)

    @pytest.mark.parametrize("kind", list(FermionKind))
    @pytest.mark.parametrize("taus", [(0.0, 0.0), (0.8, 0.1), (0.2, 1.5)])
    def test_fermion_two_points(self, parameter_set, kind, taus):
        tau2, tau1 = taus
        for beta in (math.inf, 2.0):
            formula = fermion_two_point(parameter_set, kind, 3, 1, tau2, tau1, beta)
            numeric = bdg_fermion_two_point(parameter_set, kind, 3, 1, tau2, tau1, beta)
            assert numeric == pytest.approx(formula, abs=1e-12)


@pytest.mark.parametrize("omega,beta", TOY_PAIRS)
def test_toy_model_partition(omega, beta):
    check = toy_model_check(omega, beta)
    assert check['diff'] <= 1e-12 * check['z_closed_form']
    assert check['z_closed_form'] == toy_closed_form(omega, beta)


class TestExactDiagonalization:
    @pytest.mark.parametrize("params", [ChainParams(8, 0.6, 1.3), ChainParams(8, 1.0, 0.5),
                                        ChainParams(6, 1.0, 2.0), ChainParams(10, 0.3, 0.7)])
    def test_oracle_rows_agree(self, params):
        rows = oracle_rows(params, [-1, 1, 2], t=0.7)
        assert {row['quantity'] for row in rows} >= {'ground_energy', 'sigma_z', 'B_-1', 'B_1', 'B_2',
                                                     'zz_1(t=0.7)', 'zz_2(t=0.7)'}
        for row in rows:
            assert row['ed_diff'] < 1e-9, row['quantity']
            if not math.isnan(row['bdg']):
                assert row['bdg_diff'] < 1e-12, row['quantity']

    def test_magnetization_and_majorana(self):
        params = ChainParams(8, 0.6, 1.3)
        spec = SpinChainSpec.xy(8, 0.6, 1.3)
        data = ed_build_and_diagonalize(spec)
        assert ed_expectation(spec, 'z3', data=data) == pytest.approx(transverse_magnetization(params),
                                                                      abs=1e-10)
        for l in (-2, 0, 3):
            formula = complex(majorana_correlator(params, l, 0.0).value).real
            assert ed_majorana_correlator(spec, l, data=data) == pytest.approx(formula, abs=1e-10)

    def test_real_time_zz(self):
        params = ChainParams(8, 1.0, 0.5)
        spec = SpinChainSpec.xy(8, 1.0, 0.5)
        data = ed_build_and_diagonalize(spec)
        for t in (0.0, 1.3):
            ed_value = ed_zz_connected(spec, 0, 2, t, data=data)
            assert ed_value == pytest.approx(complex(zz_connected_time(params, 2, t).value), abs=1e-10)

    def test_hamiltonian_is_hermitian(self):
        matrix = build_hamiltonian(SpinChainSpec.xy(6, 0.4, 0.9))
        np.testing.assert_allclose(matrix, matrix.conj().T, atol=1e-14)

    def test_thermal_weights_normalised(self):
        data = ed_build_and_diagonalize(SpinChainSpec.xy(4, 1.0, 0.5))
        weights, index = select_states(data, 'thermal', beta=2.0)
        assert weights.sum() == pytest.approx(1.0)
        assert len(index) == 16

    @pytest.mark.slow
    @pytest.mark.parametrize("h", [0.5, 1.5])
    def test_twelve_sites_match_thermodynamic_zz(self, h):
        spec = SpinChainSpec.xy(12, 1.0, h)
        data = ed_build_and_diagonalize(spec)
        params = ChainParams(12, 1.0, h)
        for l in (1, 2, 3):
            bulk = complex(zz_connected_time(params, l, 0.0, thermodynamic=True).value).real
            assert ed_zz_connected(spec, 0, l, data=data).real == pytest.approx(bulk, abs=0.02)


class TestOracleErrors:
    def test_too_many_sites(self):
        with pytest.raises(OracleError):
            SpinChainSpec.xy(13, 1.0, 0.5)

    def test_short_periodic_chain(self):
        with pytest.raises(OracleError):
            SpinChainSpec.xy(2, 1.0, 0.5)
        assert SpinChainSpec.xy(2, 1.0, 0.5, Boundary.OPEN).n == 2

    def test_unknown_pauli_letter(self):
        with pytest.raises(OracleError):
            parse_pauli('q3')

    def test_separation_must_fit(self):
        with pytest.raises(OracleError):
            ed_majorana_correlator(SpinChainSpec.xy(4, 1.0, 0.5), 4)

    def test_unknown_selection(self):
        data = ed_build_and_diagonalize(SpinChainSpec.xy(4, 1.0, 0.5))
        with pytest.raises(OracleError):
            select_states(data, 'excited')

    def test_thermal_needs_beta(self):
        data = ed_build_and_diagonalize(SpinChainSpec.xy(4, 1.0, 0.5))
        with pytest.raises(OracleError):
            select_states(data, 'thermal')


def test_parse_pauli_forms():
    assert parse_pauli('z4 z5') == {4: 'z', 5: 'z'}
    assert parse_pauli({1: 'X'}) == {1: 'x'}


def test_majorana_string_layout():
    assert majorana_string(0, 3) == {0: 'y', 1: 'z', 2: 'z', 3: 'y'}
    assert majorana_string(2, -1) == {2: 'x', 3: 'x'}
    assert majorana_string(1, 0) == {1: 'z'}
