"""Evolution identity residuals along short trajectories."""

import numpy as np
import pytest

import cmaflow as cm
from cmaflow.flow import FlowState
from cmaflow.identities import (
    all_checks,
    check_evol_F,
    check_evol_F2,
    check_evol_logtrh,
    check_evol_u,
    f2_two_route,
    logtrh_two_route,
    monitor_G,
    short_trajectory,
)

from conftest import cosine_field


@pytest.fixture
def mild_data(grid1, chi1):
    f = cosine_field(grid1, (1, 0), 0.25)
    u0 = cm.ScalarField(
        grid1,
        cosine_field(grid1, (1, 0), 0.01, phase=-np.pi / 2).values
        + cosine_field(grid1, (2, 0), 0.005).values,
    )
    return u0, f


@pytest.fixture
def log_speed():
    return cm.SpeedFunction("log")


@pytest.fixture
def trajectory(mild_data, chi1, log_speed):
    u0, f = mild_data
    return short_trajectory(u0, f, chi1, log_speed, 1e-5, 10)


class TestShortTrajectory:
    def test_length_and_times(self, trajectory):
        assert len(trajectory) == 11
        assert trajectory[0].t == 0.0
        assert trajectory[-1].t == pytest.approx(1e-4)

    def test_stationary_data_is_static(self, grid1, chi1, log_speed):
        f = cm.ScalarField.zeros(grid1)
        states = short_trajectory(cm.ScalarField.zeros(grid1), f, chi1,
                                  log_speed, 1e-5, 4)
        for s in states:
            assert np.max(np.abs(s.u.values)) < 1e-14
            assert np.max(np.abs(s.udot)) < 1e-14


class TestResiduals:
    def test_all_below_threshold(self, trajectory, chi1, log_speed, mild_data):
        _, f = mild_data
        reports = all_checks(trajectory, log_speed, f, chi1)
        names = [r.name for r in reports]
        assert names == ["evol_u", "evol_F", "evol_F2", "evol_logtrh"]
        for rep in reports:
            assert rep.residual_sup < 1e-4, rep.name

    def test_stationary_residuals_vanish(self, grid1, chi1, log_speed):
        f = cm.ScalarField.zeros(grid1)
        states = short_trajectory(cm.ScalarField.zeros(grid1), f, chi1,
                                  log_speed, 1e-5, 4)
        for rep in all_checks(states, log_speed, f, chi1):
            assert rep.residual_sup < 1e-12, rep.name

    @pytest.mark.parametrize("check", [check_evol_u, check_evol_F,
                                       check_evol_F2, check_evol_logtrh])
    def test_centered_order_two(self, mild_data, chi1, log_speed, check):
        u0, f = mild_data
        res = []
        for dt, steps in ((2e-5, 6), (1e-5, 12)):
            states = short_trajectory(u0, f, chi1, log_speed, dt, steps)
            res.append(check(states, log_speed, f, chi1).residual_sup)
        slope = np.log2(res[0] / res[1])
        assert slope > 1.7

    def test_forward_order_one(self, mild_data, chi1, log_speed):
        u0, f = mild_data
        res = []
        for dt, steps in ((2e-5, 6), (1e-5, 12)):
            states = short_trajectory(u0, f, chi1, log_speed, dt, steps)
            res.append(check_evol_F(states, log_speed, f, chi1,
                                    mode="forward").residual_sup)
        slope = np.log2(res[0] / res[1])
        assert 0.7 < slope < 1.3

    def test_nonconcave_speed(self, mild_data, chi1):
        # F = rho^2 is convex; the identities hold regardless
        u0, f = mild_data
        F = cm.SpeedFunction("power", a=2.0)
        states = short_trajectory(u0, f, chi1, F, 1e-5, 10)
        for rep in all_checks(states, F, f, chi1):
            assert rep.residual_sup < 1e-3, rep.name

    def test_n2_residual_small(self, grid2, chi2, log_speed):
        f = cosine_field(grid2, (1, 0, 0, 0), 0.2)
        u0 = cosine_field(grid2, (0, 0, 1, 0), 0.005)
        states = short_trajectory(u0, f, chi2, log_speed, 1e-5, 6)
        for rep in all_checks(states, log_speed, f, chi2):
            assert rep.residual_sup < 1e-4, rep.name


class TestTwoRouteChecks:
    def test_f2_distribution_of_derivatives(self, trajectory, chi1,
                                            log_speed, mild_data):
        _, f = mild_data
        val = f2_two_route(trajectory[5], log_speed, f, chi1)
        assert val < 1e-8

    def test_logtrh_precursor_vs_final(self, trajectory, chi1, log_speed,
                                       mild_data):
        _, f = mild_data
        val = logtrh_two_route(trajectory[5], log_speed, f, chi1)
        assert val < 1e-10

    def test_two_routes_with_curvature_in_F(self, mild_data, chi1):
        # speed with nonzero F'' exercises the second-derivative terms
        u0, f = mild_data
        F = cm.SpeedFunction("inverse_ma")
        states = short_trajectory(u0, f, chi1, F, 1e-5, 4)
        assert f2_two_route(states[2], F, f, chi1) < 1e-8
        assert logtrh_two_route(states[2], F, f, chi1) < 1e-10


class TestMonitorG:
    def test_flat_state_value(self, grid2, chi2):
        F = cm.SpeedFunction("linear")
        f = cm.ScalarField.zeros(grid2)
        state = FlowState.create(0.0, cm.ScalarField.zeros(grid2), f, chi2, F)
        phi = cm.ScalarField.zeros(grid2)
        # G = log n + (B/2) F(1)^2
        val = monitor_G(state, 10.0, 5.0, phi)
        assert val == pytest.approx(np.log(2.0) + 2.5 * 1.0, abs=1e-13)

    def test_constant_in_time_for_stationary(self, grid1, chi1, log_speed):
        f = cm.ScalarField.zeros(grid1)
        phi = cm.ScalarField.zeros(grid1)
        states = short_trajectory(cm.ScalarField.zeros(grid1), f, chi1,
                                  log_speed, 1e-4, 3)
        vals = [monitor_G(s, 10.0, 5.0, phi) for s in states]
        assert np.ptp(vals) < 1e-13
