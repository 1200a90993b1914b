import logging
import math

import numpy as np
import pytest

from xy_correlators import dynamic_correlators
from xy_correlators.dynamic_correlators import (critical_exponents, decay_power, decorrelation_time,
                                                majorana_correlator, near_critical_envelope, time_series,
                                                xx_bessel_series, xx_cosine_quadrature, xx_full_correlator,
                                                zz_connected_time)
from xy_correlators.error_handler import ConvergenceError
from xy_correlators.spectrum import ChainParams
from xy_correlators.static_correlators import zz_connected_static


class TestMajoranaCorrelator:
    def test_depends_on_abs_time(self, xy_params):
        forward = majorana_correlator(xy_params, 2, 1.7).value
        backward = majorana_correlator(xy_params, 2, -1.7).value
        assert forward == backward

    def test_ising_free_point(self):
        # h = 0, r = 1: only the nearest-neighbour xx bond survives
        params = ChainParams(16, 1.0, 0.0)
        assert complex(majorana_correlator(params, -1, 0.0).value) == pytest.approx(1.0, abs=1e-14)
        assert complex(majorana_correlator(params, 1, 0.0).value) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("l,t", [(1, 0.0), (2, 1.5), (-3, 4.0)])
    def test_large_chain_matches_thermodynamic(self, l, t):
        finite = majorana_correlator(ChainParams(2048, 0.7, 1.6), l, t).value
        integral = majorana_correlator(ChainParams(2048, 0.7, 1.6), l, t, thermodynamic=True, tol=1e-12)
        assert integral.converged
        assert complex(finite) == pytest.approx(complex(integral.value), abs=1e-9)

    @pytest.mark.parametrize("l", [0, 1, 2])
    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_xx_integral_equals_cosine_form_with_bessel_correction(self, l, t):
        h = 0.4
        integral = majorana_correlator(ChainParams(2, 0.0, h), l, t, thermodynamic=True, tol=1e-12)
        assert complex(integral.value) == pytest.approx(xx_full_correlator(h, l, t), abs=1e-9)


class TestZZTime:
    @pytest.mark.parametrize("l", [1, 3])
    @pytest.mark.parametrize("t", [0.0, 1.2])
    def test_large_chain_matches_thermodynamic(self, l, t):
        params = ChainParams(2048, 1.0, 0.6)
        finite = zz_connected_time(params, l, t).value
        integral = zz_connected_time(params, l, t, thermodynamic=True, tol=1e-12)
        assert complex(finite) == pytest.approx(complex(integral.value), abs=1e-9)

    def test_equal_time_matches_static(self):
        params = ChainParams(64, 1.0, 0.5)
        value = zz_connected_time(params, 2, 0.0).value
        assert complex(value).real == pytest.approx(zz_connected_static(params, 2), abs=1e-10)
        assert abs(complex(value).imag) < 1e-14


class TestBesselSeries:
    @pytest.mark.parametrize("h", [-0.5, 0.1, 0.7])
    @pytest.mark.parametrize("l", [1, 2, 4])
    @pytest.mark.parametrize("t", [0.3, 2.0, 8.0])
    def test_matches_quadrature(self, h, l, t):
        series = xx_bessel_series(h, l, t, tol=1e-12)
        assert series.converged
        assert series.value == pytest.approx(xx_cosine_quadrature(h, l, t, tol=1e-12).value, abs=1e-8)

    @pytest.mark.parametrize("l", [1, 2, 5])
    def test_zero_time_keeps_only_first_term(self, l):
        h = 0.3
        phi_h = math.acos(h)
        expected = 2.0 * math.sin(l * phi_h) / (math.pi * l)
        assert xx_bessel_series(h, l, 0.0).value == pytest.approx(expected, abs=1e-12)

    def test_tail_bound_reported(self):
        series = xx_bessel_series(0.2, 1, 30.0, tol=1e-10)
        assert series.tail_bound < 1e-10
        assert series.k_max > 60

    def test_field_outside_band(self):
        with pytest.raises(ValueError):
            xx_bessel_series(1.2, 1, 1.0)


def test_time_series_collects_values(xy_params):
    series = time_series(xy_params, 1, [0.0, 0.5, 1.0])
    assert series.values.shape == (3,)
    assert series.values[0] == pytest.approx(complex(majorana_correlator(xy_params, 1, 0.0).value))


def test_time_series_rejects_unsorted_times(xy_params):
    with pytest.raises(ValueError):
        time_series(xy_params, 1, [1.0, 0.5])


def test_decorrelation_time_scales_inversely_with_lambda():
    short = decorrelation_time(1e-2)
    long = decorrelation_time(1e-3)
    assert short > 0
    assert long / short == pytest.approx(10.0, rel=0.2)


def test_envelope_starts_at_static_value():
    lam = 0.05
    assert near_critical_envelope(lam, 0.0) == pytest.approx(xx_bessel_series(1.0 - lam, 1, 0.0).value, abs=1e-12)


@pytest.mark.parametrize("t", [1.0, 5.0, 20.0, 60.0])
def test_envelope_bounds_the_oscillating_correlator(t):
    lam = 0.05
    assert abs(xx_bessel_series(1.0 - lam, 1, t).value) <= near_critical_envelope(lam, t) + 1e-10


def test_missing_crossing_keeps_row_unconverged(monkeypatch, caplog):
    def crossing(lam, tol):
        if lam < 1e-4:
            raise ConvergenceError("no crossing")
        return 1.0 / lam

    monkeypatch.setattr(dynamic_correlators, 'decorrelation_time', crossing)
    caplog.set_level(logging.WARNING, logger='xy_correlators.dynamic_correlators')
    result = critical_exponents([1e-5, 1e-3, 1e-2])
    assert not result['converged']
    assert [row['converged'] for row in result['rows']] == [False, True, True]
    assert math.isnan(result['rows'][0]['t_star'])
    assert result['z'] == pytest.approx(2.0, rel=1e-2)
    assert 'no crossing' in caplog.text


@pytest.mark.slow
def test_critical_exponents():
    result = critical_exponents(np.geomspace(1e-5, 1e-2, 7))
    assert result['nu'] == pytest.approx(0.5, abs=0.02)
    assert result['z'] == pytest.approx(2.0, abs=0.2)
    assert [row['lambda'] for row in result['rows']] == sorted(row['lambda'] for row in result['rows'])


@pytest.mark.slow
def test_decay_power_off_criticality():
    result = decay_power(ChainParams(2, 1.0, 0.5))
    assert result['p'] == pytest.approx(0.5, abs=0.05)
