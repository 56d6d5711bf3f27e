"""Speed function family: values, derivatives, and monotonicity guards."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import cmaflow as cm
from cmaflow.speed import (
    beta_to_exponent,
    custom_speed,
    inverse_ma_speed,
    linear_speed,
    log_speed,
    neg_power_scaled_speed,
    power_speed,
)

ALL_SPEEDS = [
    log_speed(),
    linear_speed(),
    power_speed(2.0),
    power_speed(0.5),
    inverse_ma_speed(),
    neg_power_scaled_speed(-1.0, 3.0),
    custom_speed([(1, 1.0), (-1, -0.5)]),
]


class TestValues:
    def test_log(self):
        F = log_speed()
        assert F.eval(1.0) == pytest.approx(0.0)
        assert F.eval(np.e) == pytest.approx(1.0)
        assert F.deriv(2.0) == pytest.approx(0.5)
        assert F.deriv2(2.0) == pytest.approx(-0.25)

    def test_linear(self):
        F = linear_speed()
        assert F.eval(3.0) == pytest.approx(3.0)
        assert F.deriv(3.0) == pytest.approx(1.0)
        assert F.deriv2(3.0) == pytest.approx(0.0)

    def test_power(self):
        F = power_speed(2.0)
        assert F.eval(3.0) == pytest.approx(9.0)
        assert F.deriv(3.0) == pytest.approx(6.0)
        assert F.deriv2(3.0) == pytest.approx(2.0)

    def test_inverse_ma(self):
        F = inverse_ma_speed()
        assert F.eval(2.0) == pytest.approx(0.5)
        assert F.deriv(2.0) == pytest.approx(0.25)
        assert F.deriv2(2.0) == pytest.approx(-0.25)

    def test_neg_power_scaled(self):
        # F = -scale rho^a with a < 0 is increasing
        F = neg_power_scaled_speed(-1.0, 3.0)
        assert F.eval(2.0) == pytest.approx(-1.5)
        assert F.deriv(2.0) == pytest.approx(0.75)

    def test_custom_laurent(self):
        F = custom_speed([(1, 1.0), (-1, -0.5)])
        assert F.eval(2.0) == pytest.approx(2.0 - 0.25)
        assert F.deriv(2.0) == pytest.approx(1.0 + 0.125)

    def test_array_evaluation(self):
        F = log_speed()
        rho = np.array([0.5, 1.0, 2.0])
        assert np.allclose(F.eval(rho), np.log(rho))
        assert isinstance(F.eval(2.0), float)


class TestDerivatives:
    @pytest.mark.parametrize("F", ALL_SPEEDS, ids=lambda F: F.describe())
    def test_deriv_matches_finite_difference(self, F):
        rho = np.geomspace(0.1, 10.0, 25)
        eps = 1e-6
        fd = (np.asarray(F.eval(rho + eps)) - np.asarray(F.eval(rho - eps))) / (2 * eps)
        assert np.allclose(F.deriv(rho), fd, rtol=1e-7, atol=1e-7)

    @pytest.mark.parametrize("F", ALL_SPEEDS, ids=lambda F: F.describe())
    def test_deriv2_matches_finite_difference(self, F):
        rho = np.geomspace(0.1, 10.0, 25)
        eps = 1e-5
        fd = (
            np.asarray(F.eval(rho + eps))
            - 2 * np.asarray(F.eval(rho))
            + np.asarray(F.eval(rho - eps))
        ) / eps**2
        assert np.allclose(F.deriv2(rho), fd, rtol=1e-4, atol=1e-4)

    @given(rho=st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_log_derivative_property(self, rho):
        F = log_speed()
        eps = 1e-7 * max(rho, 1.0)
        fd = (F.eval(rho + eps) - F.eval(rho - eps)) / (2 * eps)
        assert F.deriv(rho) == pytest.approx(fd, rel=1e-5)


class TestValidation:
    def test_domain_error(self):
        F = log_speed()
        with pytest.raises(cm.SpeedDomainError):
            F.eval(0.0)
        with pytest.raises(cm.SpeedDomainError):
            F.eval(np.array([1.0, -2.0]))

    def test_decreasing_speed_rejected(self):
        with pytest.raises(cm.ParabolicityError):
            power_speed(-1.0)  # rho^{-1} is decreasing

    def test_zero_exponent_rejected(self):
        with pytest.raises(cm.ParabolicityError):
            power_speed(0.0)

    def test_neg_power_scaled_positive_exponent_rejected(self):
        # -scale rho^a with a > 0 is decreasing
        with pytest.raises(cm.ParabolicityError):
            neg_power_scaled_speed(1.0, 1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            cm.SpeedFunction("sqrtish")

    def test_bad_operating_range(self):
        with pytest.raises(ValueError):
            cm.SpeedFunction("log", operating_range=(2.0, 1.0))

    def test_validate_range_on_subinterval(self):
        F = log_speed()
        F.validate_range(0.5, 2.0)
        with pytest.raises(cm.SpeedDomainError):
            F.validate_range(-1.0, 2.0)


class TestBetaReduction:
    def test_zero_slope_case(self):
        # n = 3, beta = 1: a = (3-2)*1 / (6-2-3) = 1
        assert beta_to_exponent(1.0, 3) == pytest.approx(1.0)

    def test_negative_exponent(self):
        # n = 3, beta = 2: a = 2 / (6-2-6) = -1
        assert beta_to_exponent(2.0, 3) == pytest.approx(-1.0)

    def test_dimension_two_collapses(self):
        # n = 2: numerator (n-2) = 0 for every regular beta
        assert beta_to_exponent(0.5, 2) == pytest.approx(0.0)

    def test_singular_reduction(self):
        # denominator 2n - 2 - n beta = 0 at beta = (2n-2)/n
        with pytest.raises(cm.SingularReductionError):
            beta_to_exponent(4.0 / 3.0, 3)
