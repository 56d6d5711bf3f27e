"""Time integration of du/dt = F(e^{-f} det h).

Two schemes: explicit RK4 under a CFL bound derived from the linearized
coefficient, and a stabilized first-order IMEX step that treats a
frozen-coefficient background Laplacian implicitly,

    (1 - dt cbar Delta) u+ = u + dt (F(H) - cbar Delta u),

solved exactly in spectral space.  Admissibility is re-verified on every
accepted step; a failed step is retried with a halved dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import DiagnosticsRecord
from .endo import BackgroundMetric, EndoField, build_endo, linearized_coefficient
from .errors import AdmissibilityError, NonConvergenceError
from .geometry import ScalarField, _laplace_multiplier
from .speed import SpeedFunction

MAX_STEP_RETRIES = 10


@dataclass
class StepPolicy:
    scheme: str = "imex"  # "imex" | "rk4"
    cfl_safety: float = 0.25
    dt_max: float = 0.05
    residual_tol: float = 1e-6
    t_max: float = 100.0
    max_steps: int = 200_000
    imex_dt_factor: float = 100.0

    def __post_init__(self):
        if not (0 < self.cfl_safety <= 1):
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.scheme not in ("imex", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class FlowState:
    """u at time t with its cached h-derived quantities; rebuilt on every
    accepted step."""

    t: float
    u: ScalarField
    endo: EndoField
    H: np.ndarray       # e^{-f} det h
    udot: np.ndarray    # F(H), the flow speed field

    @classmethod
    def create(cls, t: float, u: ScalarField, f: ScalarField,
               chi: BackgroundMetric, F: SpeedFunction) -> "FlowState":
        endo = build_endo(chi, u)
        H = np.exp(-f.values) * endo.det_h
        return cls(t, u, endo, H, np.asarray(F.eval(H)))


def rhs(u: ScalarField, f: ScalarField, chi: BackgroundMetric,
        F: SpeedFunction) -> ScalarField:
    """Pointwise F(e^{-f} det h); admissibility and parabolicity errors
    propagate."""
    endo = build_endo(chi, u)
    H = np.exp(-f.values) * endo.det_h
    return ScalarField(u.grid, np.asarray(F.eval(H)))


def stable_dt(state: FlowState, F: SpeedFunction, f: ScalarField,
              policy: StepPolicy) -> float:
    """Explicit stability bound dt = safety / (max c_eff * mu_max) with
    mu_max = pi^2 n N^2 / 2 the largest discrete Hessian symbol; c_eff
    weights the coefficient by the worst inverse-metric eigenvalue."""
    grid = state.u.grid
    c, _ = linearized_coefficient(state.endo, F, f)
    c_eff = float(np.max(c / state.endo.eigenvalues[..., 0]))
    mu_max = np.pi**2 * grid.n * grid.N**2 / 2.0
    return min(policy.dt_max, policy.cfl_safety / (c_eff * mu_max))


def step_rk4(state: FlowState, dt: float, f: ScalarField,
             chi: BackgroundMetric, F: SpeedFunction) -> FlowState:
    """Classical RK4 step; every stage re-validates admissibility."""
    grid = state.u.grid

    def R(uvals):
        return rhs(ScalarField(grid, uvals), f, chi, F).values

    u0 = state.u.values
    k1 = state.udot
    k2 = R(u0 + 0.5 * dt * k1)
    k3 = R(u0 + 0.5 * dt * k2)
    k4 = R(u0 + dt * k3)
    u1 = u0 + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return FlowState.create(state.t + dt, ScalarField(grid, u1), f, chi, F)


def step_imex(state: FlowState, dt: float, f: ScalarField,
              chi: BackgroundMetric, F: SpeedFunction) -> FlowState:
    """Stabilized semi-implicit step; unconditionally stable for the stiff
    linear part."""
    grid = state.u.grid
    c, _ = linearized_coefficient(state.endo, F, f)
    cbar = float(np.max(c))
    mult = _laplace_multiplier(grid, chi.chi_inv)

    u_hat = np.fft.fftn(state.u.values)
    lap_u = np.fft.ifftn(u_hat * mult).real
    explicit = state.udot - cbar * lap_u
    new_hat = (u_hat + dt * np.fft.fftn(explicit)) / (1.0 - dt * cbar * mult)
    u1 = np.fft.ifftn(new_hat).real
    return FlowState.create(state.t + dt, ScalarField(grid, u1), f, chi, F)


@dataclass
class FlowResult:
    state: FlowState
    phi: ScalarField
    series: list[DiagnosticsRecord]
    converged: bool
    c0: float
    steps: int
    retries: int = 0

    @property
    def status(self) -> str:
        return "CONVERGED" if self.converged else "NOT_CONVERGED"


def _record(state: FlowState, dt: float, c0: float, A: float, B: float
            ) -> DiagnosticsRecord:
    endo = state.endo
    uvals = state.u.values
    phi = uvals - np.mean(uvals)
    G = np.log(endo.tr_h) - A * phi + 0.5 * B * state.udot**2
    return DiagnosticsRecord(
        t=state.t,
        dt=dt,
        H_min=float(np.min(state.H)),
        H_max=float(np.max(state.H)),
        TrH_min=float(np.min(endo.tr_h)),
        TrH_max=float(np.max(endo.tr_h)),
        lambda_min=endo.lambda_min,
        lambda_max=endo.lambda_max,
        osc_udot=float(np.max(state.udot) - np.min(state.udot)),
        residual_sup=float(np.max(np.abs(state.H - c0))),
        G_max=float(np.max(G)),
        phi_mean=float(np.mean(phi)),
        phi_sup=float(np.max(np.abs(phi))),
    )


def run_flow(u0: ScalarField, f: ScalarField, chi: BackgroundMetric,
             F: SpeedFunction, policy: StepPolicy,
             A: float = 10.0, B: float = 5.0,
             on_step=None) -> FlowResult:
    """Integrate until sup|e^{-f} det h - c0| < residual_tol or the budget
    runs out.  Non-convergence by budget is a flagged partial result, not
    an exception."""
    from .stationary import compute_c0

    c0 = compute_c0(chi, f)
    state = FlowState.create(0.0, u0, f, chi, F)

    # operating range from the initial data: the extrema of H never widen
    H0_min, H0_max = float(np.min(state.H)), float(np.max(state.H))
    F.validate_range(0.5 * H0_min, 2.0 * H0_max)

    stepper = step_imex if policy.scheme == "imex" else step_rk4
    series = [_record(state, 0.0, c0, A, B)]
    if on_step is not None:
        on_step(state, series[-1])
    converged = series[-1].residual_sup < policy.residual_tol
    steps = 0
    retries = 0

    while not converged and steps < policy.max_steps and state.t < policy.t_max:
        dt = stable_dt(state, F, f, policy)
        if policy.scheme == "imex":
            dt = min(policy.dt_max, policy.imex_dt_factor * dt)
        dt = min(dt, policy.t_max - state.t)
        if dt <= 1e-15:
            break
        for attempt in range(MAX_STEP_RETRIES + 1):
            try:
                new_state = stepper(state, dt, f, chi, F)
                break
            except AdmissibilityError:
                retries += 1
                dt *= 0.5
        else:
            raise NonConvergenceError(
                f"step rejected {MAX_STEP_RETRIES} times at t = {state.t:.6g}",
                last_residual=series[-1].residual_sup,
            )
        state = new_state
        steps += 1
        rec = _record(state, dt, c0, A, B)
        series.append(rec)
        if on_step is not None:
            on_step(state, rec)
        converged = rec.residual_sup < policy.residual_tol

    uvals = state.u.values
    phi = ScalarField(state.u.grid, uvals - np.mean(uvals))
    return FlowResult(state, phi, series, converged, c0, steps, retries)
