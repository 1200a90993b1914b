import math

import numpy as np
import pytest
from scipy.special import jv

from xy_correlators.error_handler import ConvergenceError, CovarianceError
from xy_correlators.numerics import (bessel_j, bessel_j_sequence, eig_antisym, fit_power_law, integrate,
                                     lu_det, lu_logdet, solve)


class TestIntegrate:
    def test_polynomial_exact(self):
        result = integrate(lambda x: x ** 5 - 2 * x, 0.0, 2.0, tol=1e-14)
        assert result.converged
        assert result.value == pytest.approx(64.0 / 6.0 - 4.0, abs=1e-13)

    def test_oscillatory_integrand(self):
        result = integrate(lambda x: np.cos(40.0 * x), 0.0, math.pi / 2, tol=1e-12)
        assert result.value == pytest.approx(math.sin(20.0 * math.pi) / 40.0, abs=1e-11)

    def test_complex_integrand(self):
        result = integrate(lambda x: np.exp(1j * x), 0.0, math.pi, tol=1e-13)
        assert result.value == pytest.approx(2j, abs=1e-12)

    def test_breakpoint_at_kink(self):
        result = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, tol=1e-13, breakpoints=[0.3])
        assert result.value == pytest.approx(0.5 * (0.09 + 0.49), abs=1e-13)

    def test_panel_cap_reports_not_converged(self):
        result = integrate(lambda x: np.sign(np.sin(200.0 * x)), 0.0, 1.0, tol=1e-15, max_panels=4)
        assert not result.converged
        assert result.est_error == np.inf

    def test_reversed_interval(self):
        forward = integrate(np.exp, 0.0, 1.0).value
        backward = integrate(np.exp, 1.0, 0.0).value
        assert backward == pytest.approx(-forward, abs=1e-13)


class TestBessel:
    @pytest.mark.parametrize("x", [0.1, 1.0, 7.5, 40.0, -3.0])
    def test_sequence_matches_scipy(self, x):
        values = bessel_j_sequence(30, x)
        np.testing.assert_allclose(values, jv(np.arange(31), x), atol=1e-13)

    def test_zero_argument(self):
        values = bessel_j_sequence(5, 0.0)
        np.testing.assert_array_equal(values, [1.0, 0, 0, 0, 0, 0])

    def test_negative_order(self):
        assert bessel_j(-3, 2.5) == pytest.approx(-jv(3, 2.5), abs=1e-14)
        assert bessel_j(-4, 2.5) == pytest.approx(jv(4, 2.5), abs=1e-14)

    def test_large_argument_normalization(self):
        assert bessel_j(0, 400.0) == pytest.approx(jv(0, 400.0), abs=1e-12)

    def test_negative_k_max_rejected(self):
        with pytest.raises(ValueError):
            bessel_j_sequence(-1, 1.0)


class TestLinearAlgebra:
    def test_lu_det_with_pivoting(self):
        matrix = np.array([[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 4.0]])
        assert lu_det(matrix) == pytest.approx(np.linalg.det(matrix), abs=1e-12)

    def test_lu_logdet_negative_determinant(self):
        matrix = np.diag([2.0, -3.0, 1e-200, 1e200])
        value = lu_logdet(matrix)
        assert value.real == pytest.approx(math.log(6.0), abs=1e-10)
        assert abs(value.imag) == pytest.approx(math.pi)

    def test_solve_singular_raises(self):
        with pytest.raises(ConvergenceError):
            solve(np.zeros((3, 3)), np.ones(3))


class TestEigAntisym:
    def test_paired_spectrum(self):
        gamma = np.zeros((4, 4))
        gamma[0, 1], gamma[1, 0] = 0.6, -0.6
        gamma[2, 3], gamma[3, 2] = -0.2, 0.2
        np.testing.assert_allclose(eig_antisym(gamma), [0.2, 0.6], atol=1e-14)

    def test_odd_size_rejected(self):
        with pytest.raises(CovarianceError):
            eig_antisym(np.zeros((3, 3)))


def test_fit_power_law_recovers_exponent():
    x = np.geomspace(1e-3, 1e-1, 7)
    slope, intercept, residual = fit_power_law(x, 3.0 * x ** -0.5)
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert residual < 1e-12
