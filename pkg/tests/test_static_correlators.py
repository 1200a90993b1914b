import math

import numpy as np
import pytest

from xy_correlators.dynamic_correlators import majorana_correlator, xx_full_correlator
from xy_correlators.spectrum import ChainParams
from xy_correlators.static_correlators import (FermionKind, critical_angle, fermion_two_point,
                                               magnetization_report, magnetization_thermodynamic,
                                               majorana_equal_time_xx, r_function, sigma_function,
                                               transverse_magnetization, zz_connected_static)


class TestFermionTwoPoint:
    def test_equal_time_occupations_sum_to_one(self, xy_params):
        particle = fermion_two_point(xy_params, FermionKind.PSI_PSI_DAGGER, 3, 3, 0.0, 0.0)
        hole = fermion_two_point(xy_params, FermionKind.PSI_DAGGER_PSI, 3, 3, 0.0, 0.0)
        assert particle + hole == pytest.approx(1.0, abs=1e-14)

    def test_occupation_matches_magnetization(self, parameter_set):
        mag = transverse_magnetization(parameter_set)
        value = fermion_two_point(parameter_set, FermionKind.PSI_PSI_DAGGER, 0, 0, 0.0, 0.0)
        assert value == pytest.approx(0.5 * (1.0 + mag), abs=1e-13)

    def test_translation_invariance(self, xy_params):
        first = fermion_two_point(xy_params, FermionKind.PSI_PSI, 4, 1, 0.3, 0.0)
        second = fermion_two_point(xy_params, FermionKind.PSI_PSI, 6, 3, 0.3, 0.0)
        assert first == pytest.approx(second, abs=1e-14)

    def test_site_out_of_range(self, ising_params):
        with pytest.raises(IndexError):
            fermion_two_point(ising_params, FermionKind.PSI_PSI, 8, 0, 0.0, 0.0)


class TestMagnetization:
    def test_ising_zero_field(self):
        assert transverse_magnetization(ChainParams(16, 1.0, 0.0)) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("h,r", [(1.5, 1.0), (2.0, 0.5), (1.2, 0.3)])
    def test_mode_sum_converges_to_integral_above_one(self, h, r):
        mode_sum = transverse_magnetization(ChainParams(4096, r, h))
        assert abs(mode_sum - magnetization_thermodynamic(h, r).value) <= 1e-5

    def test_printed_integrand_discrepancy_below_one(self):
        report = magnetization_report(ChainParams(4096, 1.0, 0.5))
        assert abs(report['mode_sum'] - report['branch_integral']) <= 1e-5
        assert abs(report['printed_minus_branch']) > 0.1

    def test_integrands_agree_above_one(self):
        report = magnetization_report(ChainParams(64, 1.0, 1.4))
        assert report['printed_minus_branch'] == pytest.approx(0.0, abs=1e-12)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            magnetization_thermodynamic(0.5, 1.0, variant='other')


class TestZZStatic:
    @pytest.mark.parametrize("h", [0.3, 0.5, 1.4])
    @pytest.mark.parametrize("l", [1, 2, 3, 5])
    def test_sigma_form_matches_mode_form(self, h, l):
        params = ChainParams(64, 1.0, h)
        sigma_form = zz_connected_static(params, l, method='sigma')
        mode_form = zz_connected_static(params, l, method='modes')
        assert sigma_form == pytest.approx(mode_form, abs=1e-10)

    def test_sigma_form_needs_ising(self, xy_params):
        with pytest.raises(ValueError):
            zz_connected_static(xy_params, 1, method='sigma')

    def test_zero_separation_rejected(self, ising_params):
        with pytest.raises(ValueError):
            zz_connected_static(ising_params, 0)


class TestRFunction:
    def test_large_chain_approaches_integral(self):
        assert r_function(0.5, 3, n_sites=2048) == pytest.approx(r_function(0.5, 3), abs=1e-6)

    def test_sigma_definition(self):
        assert sigma_function(0.7, 2, 32) == pytest.approx(
            0.7 * r_function(0.7, 2, 32) - r_function(0.7, 3, 32))


class TestXXEqualTime:
    @pytest.mark.parametrize("h", [-0.4, 0.2, 0.6])
    @pytest.mark.parametrize("l", [1, 2, 3])
    def test_closed_form_matches_integral(self, h, l):
        integral = majorana_correlator(ChainParams(2, 0.0, h), l, 0.0, thermodynamic=True, tol=1e-13)
        assert complex(integral.value).real == pytest.approx(majorana_equal_time_xx(h, l), abs=1e-12)
        assert abs(complex(integral.value).imag) < 1e-12

    def test_zero_separation_is_minus_magnetization(self):
        h = 0.3
        full = xx_full_correlator(h, 0, 0.0)
        assert full.real == pytest.approx(-magnetization_thermodynamic(h, 0.0).value, abs=1e-12)
        assert majorana_equal_time_xx(h, 0) == pytest.approx(2.0 * math.acos(h) / math.pi)

    def test_critical_angle_outside_band(self):
        with pytest.raises(ValueError):
            critical_angle(1.5)
