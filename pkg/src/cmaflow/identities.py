"""Numerical verification of the evolution identities along a trajectory.

On the flat torus every curvature contraction vanishes, so the checked
right-hand sides are the flat specializations.  Time derivatives are taken
as finite differences of actual dumped states (centered by default);
spatial terms are assembled spectrally at the evaluation state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .endo import BackgroundMetric, linearized_coefficient, metric_gradient_square
from .flow import FlowState, step_rk4
from .geometry import ScalarField, complex_hessian, holo_derivative, laplacian, \
    third_derivatives
from .speed import SpeedFunction


@dataclass
class IdentityReport:
    name: str
    t: float
    residual_sup: float
    dt: float
    N: int


def short_trajectory(u0: ScalarField, f: ScalarField, chi: BackgroundMetric,
                     F: SpeedFunction, dt: float, steps: int) -> list[FlowState]:
    """Fixed-dt RK4 trajectory used as input to the identity checks."""
    states = [FlowState.create(0.0, u0, f, chi, F)]
    for _ in range(steps):
        states.append(step_rk4(states[-1], dt, f, chi, F))
    return states


class _StateTerms:
    """Spectrally assembled spatial ingredients at one state."""

    def __init__(self, state: FlowState, F: SpeedFunction, f: ScalarField,
                 chi: BackgroundMetric):
        grid = state.u.grid
        self.grid = grid
        self.n = grid.n
        endo = state.endo
        self.c, self.g_inv = linearized_coefficient(endo, F, f)
        self.chi = chi
        self.det_h = endo.det_h
        self.tr_h = endo.tr_h
        self.H = state.H
        self.Fval = state.udot
        self.Fp = np.asarray(F.deriv(self.H))
        self.Fpp = np.asarray(F.deriv2(self.H))
        self.emf = np.exp(-f.values)

        det_field = ScalarField(grid, self.det_h)
        self.grad_det = np.stack(
            [holo_derivative(det_field, j) for j in range(self.n)], axis=-1)
        self.grad_f = np.stack(
            [holo_derivative(f, j) for j in range(self.n)], axis=-1)
        tr_field = ScalarField(grid, self.tr_h)
        self.grad_tr = np.stack(
            [holo_derivative(tr_field, j) for j in range(self.n)], axis=-1)
        self.lap_emf = laplacian(ScalarField(grid, self.emf), chi.chi_inv).values
        self.T3 = third_derivatives(state.u)

    def L(self, vvals: np.ndarray) -> np.ndarray:
        """Linearized operator c g^{j kbar} d_j d_kbar applied to a real field."""
        hess = complex_hessian(ScalarField(self.grid, vvals)).values
        return self.c * np.einsum("...jk,...kj->...", self.g_inv, hess).real

    def qg(self, a, b) -> np.ndarray:
        """g^{j kbar} a_j conj(b)_kbar."""
        return np.einsum("...jk,...j,...k->...", self.g_inv, a, np.conj(b))

    def qchi(self, a, b) -> np.ndarray:
        """chi^{j kbar} a_j conj(b)_kbar."""
        return np.einsum("jk,...j,...k->...", self.chi.chi_inv, a, np.conj(b))


def _diff_points(states, mode):
    if mode == "centered":
        if len(states) < 3:
            raise ValueError("centered differencing needs at least 3 states")
        return [(i, i - 1, i + 1, states[i + 1].t - states[i - 1].t)
                for i in range(1, len(states) - 1)]
    if mode == "forward":
        if len(states) < 2:
            raise ValueError("forward differencing needs at least 2 states")
        return [(i, i, i + 1, states[i + 1].t - states[i].t)
                for i in range(len(states) - 1)]
    raise ValueError(f"unknown differencing mode {mode!r}")


def _check(name, states, F, f, chi, mode, extract, spatial):
    """Common driver: residual of d/dt extract - (L extract + rhs) in sup
    norm, maximized over evaluable times."""
    pts = _diff_points(states, mode)
    dt = states[1].t - states[0].t
    worst = 0.0
    t_worst = states[pts[0][0]].t
    for i, lo, hi, span in pts:
        ddt = (extract(states[hi]) - extract(states[lo])) / span
        terms = _StateTerms(states[i], F, f, chi)
        resid = float(np.max(np.abs(ddt - spatial(terms, states[i]))))
        if resid > worst:
            worst, t_worst = resid, states[i].t
    return IdentityReport(name, t_worst, worst, dt, states[0].u.grid.N)


def check_evol_u(states, F: SpeedFunction, f: ScalarField,
                 chi: BackgroundMetric, mode: str = "centered") -> IdentityReport:
    """du/dt = L u + F - n F' e^{-f} det h + F' e^{-f} det h g^{j kbar} chi_{kbar j}."""

    def spatial(terms: _StateTerms, state: FlowState):
        tr_ginv_chi = np.einsum(
            "...jk,kj->...", terms.g_inv, chi.chi).real
        rhs = terms.Fval - terms.n * terms.c + terms.c * tr_ginv_chi
        return terms.L(state.u.values) + rhs

    return _check("evol_u", states, F, f, chi, mode,
                  lambda s: s.u.values, spatial)


def check_evol_F(states, F: SpeedFunction, f: ScalarField,
                 chi: BackgroundMetric, mode: str = "centered") -> IdentityReport:
    """dF/dt = L F (the time-differentiated flow equation)."""

    def spatial(terms: _StateTerms, state: FlowState):
        return terms.L(state.udot)

    return _check("evol_F", states, F, f, chi, mode,
                  lambda s: s.udot, spatial)


def _f2_rhs(terms: _StateTerms) -> np.ndarray:
    """Assembled right-hand side of the F^2 identity (three explicit terms)."""
    Fp3 = terms.Fp**3
    e3 = terms.emf**3
    d = terms.det_h
    qdd = terms.qg(terms.grad_det, terms.grad_det).real
    qff = terms.qg(terms.grad_f, terms.grad_f).real
    qfd = terms.qg(terms.grad_f, terms.grad_det).real
    return (-2 * Fp3 * e3 * d * qdd
            - 2 * Fp3 * e3 * d**3 * qff
            + 4 * Fp3 * e3 * d**2 * qfd)


def check_evol_F2(states, F: SpeedFunction, f: ScalarField,
                  chi: BackgroundMetric, mode: str = "centered") -> IdentityReport:
    """d(F^2)/dt = L F^2 - 2 (F')^3 e^{-3f} det h (gradient-square terms)."""

    def spatial(terms: _StateTerms, state: FlowState):
        return terms.L(state.udot**2) + _f2_rhs(terms)

    return _check("evol_F2", states, F, f, chi, mode,
                  lambda s: s.udot**2, spatial)


def f2_two_route(state: FlowState, F: SpeedFunction, f: ScalarField,
                 chi: BackgroundMetric) -> float:
    """Algebraic cross-check of the distributed F^2 right-hand side against
    -2 F' e^{-f} det h g^{j kbar} grad_j F grad_kbar F with grad F taken
    spectrally from the F field itself.  Independent of dt."""
    terms = _StateTerms(state, F, f, chi)
    grid = state.u.grid
    Ffield = ScalarField(grid, state.udot)
    gradF = np.stack(
        [holo_derivative(Ffield, j) for j in range(grid.n)], axis=-1)
    direct = -2 * terms.Fp * terms.emf * terms.det_h \
        * terms.qg(gradF, gradF).real
    return float(np.max(np.abs(_f2_rhs(terms) - direct)))


def _logtrh_braces_final(terms: _StateTerms) -> np.ndarray:
    """Braces of the expanded log Tr h identity, curvature terms zeroed."""
    d = terms.det_h
    qdd = terms.qchi(terms.grad_det, terms.grad_det).real
    qff = terms.qchi(terms.grad_f, terms.grad_f).real
    qfd = terms.qchi(terms.grad_f, terms.grad_det).real
    full_grad = metric_gradient_square(terms.chi, terms.g_inv, terms.T3)
    qtrtr_g = terms.qg(terms.grad_tr, terms.grad_tr).real
    ratio = terms.Fpp / terms.Fp
    return (qtrtr_g / terms.tr_h
            - full_grad
            + qdd / d**2
            - 2.0 * qfd / d
            + ratio * terms.emf * d * qff
            + ratio * terms.emf / d * qdd
            - 2.0 * ratio * terms.emf * qfd
            + terms.lap_emf / terms.emf)


def check_evol_logtrh(states, F: SpeedFunction, f: ScalarField,
                      chi: BackgroundMetric, mode: str = "centered"
                      ) -> IdentityReport:
    """d(log Tr h)/dt = L log Tr h + (c / Tr h) * braces, flat background."""

    def spatial(terms: _StateTerms, state: FlowState):
        rhs = terms.c / terms.tr_h * _logtrh_braces_final(terms)
        return terms.L(np.log(terms.tr_h)) + rhs

    return _check("evol_logtrh", states, F, f, chi, mode,
                  lambda s: np.log(s.endo.tr_h), spatial)


def logtrh_two_route(state: FlowState, F: SpeedFunction, f: ScalarField,
                     chi: BackgroundMetric) -> float:
    """Assemble the log Tr h right-hand side from its precursor form (the
    evolution of Delta u with the gradient of e^{-f} det h unexpanded) and
    compare with the final expanded form.  Pure pointwise algebra."""
    terms = _StateTerms(state, F, f, chi)
    d = terms.det_h
    grad_H = terms.emf[..., None] * (
        terms.grad_det - d[..., None] * terms.grad_f)
    qHH = terms.qchi(grad_H, grad_H).real
    qdd = terms.qchi(terms.grad_det, terms.grad_det).real
    qfd = terms.qchi(terms.grad_f, terms.grad_det).real
    full_grad = metric_gradient_square(terms.chi, terms.g_inv, terms.T3)
    braces_precursor = (
        -full_grad
        + qdd / d**2
        - 2.0 * qfd / d
        + (terms.Fpp / terms.Fp) / (terms.emf * d) * qHH
        + terms.lap_emf / terms.emf)
    qtrtr_g = terms.qg(terms.grad_tr, terms.grad_tr).real
    rhs_precursor = terms.c / terms.tr_h * braces_precursor \
        + terms.c / terms.tr_h**2 * qtrtr_g
    rhs_final = terms.c / terms.tr_h * _logtrh_braces_final(terms)
    return float(np.max(np.abs(rhs_final - rhs_precursor)))


def monitor_G(state: FlowState, A: float, B: float, phi: ScalarField) -> float:
    """max_x of the test function G = log Tr h - A phi + (B/2) F^2."""
    G = np.log(state.endo.tr_h) - A * phi.values + 0.5 * B * state.udot**2
    return float(np.max(G))


def all_checks(states, F, f, chi, mode: str = "centered") -> list[IdentityReport]:
    return [
        check_evol_u(states, F, f, chi, mode),
        check_evol_F(states, F, f, chi, mode),
        check_evol_F2(states, F, f, chi, mode),
        check_evol_logtrh(states, F, f, chi, mode),
    ]
