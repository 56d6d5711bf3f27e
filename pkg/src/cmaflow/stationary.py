"""Independent solvers for the stationary equation
(chi + i ddbar phi)^n = c0 e^f chi^n.

For n = 1 the equation is linear in the Laplacian and one spectral Poisson
solve is exact.  For general n a damped Newton iteration on the log form
log det h = f + log c0 is used, with a Poisson-preconditioned GMRES inner
solve.  Both fix the mean-zero gauge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .endo import BackgroundMetric, build_endo
from .errors import AdmissibilityError, NonConvergenceError
from .geometry import (
    ScalarField,
    complex_hessian,
    integrate,
    poisson_solve,
)

ARMIJO_SLOPE = 1e-4
ARMIJO_FACTOR = 0.5
MAX_LINE_SEARCH = 20
LINEAR_RTOL = 1e-10


def compute_c0(chi: BackgroundMetric, f: ScalarField) -> float:
    """Compatibility constant c0 = int chi^n / int e^f chi^n by quadrature."""
    grid = f.grid
    vol = integrate(ScalarField.constant(grid, 1.0), det_chi=chi.det_chi)
    ef = ScalarField(grid, np.exp(f.values))
    return vol / integrate(ef, det_chi=chi.det_chi)


@dataclass
class StationaryProblem:
    chi: BackgroundMetric
    f: ScalarField
    c0: float = field(default=None)  # type: ignore[assignment]
    tol: float = 1e-11

    def __post_init__(self):
        c0 = compute_c0(self.chi, self.f)
        if self.c0 is None:
            self.c0 = c0
        elif abs(self.c0 - c0) > 1e-12 * abs(c0):
            raise ValueError(
                f"c0 = {self.c0!r} inconsistent with quadrature value {c0!r}"
            )


def residual(chi: BackgroundMetric, f: ScalarField, phi: ScalarField,
             c0: float):
    """Pointwise e^{-f} det h[phi] - c0 and its sup norm."""
    endo = build_endo(chi, phi)
    vals = np.exp(-f.values) * endo.det_h - c0
    return ScalarField(phi.grid, vals), float(np.max(np.abs(vals)))


def solve_n1(problem: StationaryProblem) -> ScalarField:
    """Exact n = 1 solve: det h = 1 + Delta phi, so Delta phi = c0 e^f - 1."""
    grid = problem.f.grid
    if grid.n != 1:
        raise ValueError("solve_n1 requires complex dimension 1")
    rhs_vals = problem.c0 * np.exp(problem.f.values) - 1.0
    phi = poisson_solve(ScalarField(grid, rhs_vals), problem.chi.chi_inv)
    try:
        build_endo(problem.chi, phi)
    except AdmissibilityError as exc:
        raise NonConvergenceError(
            "n=1 stationary solution is not admissible at this resolution; "
            "increase N or reduce the amplitude of f"
        ) from exc
    return phi


@dataclass
class NewtonResult:
    phi: ScalarField
    residuals: list[float]
    iterations: int


def _apply_linearization(grid, g_inv, vvals):
    """g^{j kbar} d_j d_kbar v for a real field v."""
    hess = complex_hessian(ScalarField(grid, vvals)).values
    return np.einsum("...jk,...kj->...", g_inv, hess).real


def solve_newton(problem: StationaryProblem,
                 initial_guess: ScalarField | None = None,
                 max_iter: int = 50,
                 return_history: bool = False):
    """Damped Newton iteration on r(phi) = log det h - f - log c0.

    The linearized equation g^{j kbar} d_j d_kbar (dphi) = -r is solved on
    the mean-zero subspace by Poisson-preconditioned GMRES to relative
    residual 1e-10; a backtracking Armijo line search keeps iterates
    admissible.  Iterates are projected to mean zero.
    """
    grid = problem.f.grid
    chi = problem.chi
    npts = grid.num_points
    log_c0 = np.log(problem.c0)

    if initial_guess is None:
        phi = ScalarField.zeros(grid)
    else:
        phi = ScalarField(grid, initial_guess.values - np.mean(initial_guess.values))

    def residual_field(p: ScalarField):
        endo = build_endo(chi, p)
        r = np.log(endo.det_h) - problem.f.values - log_c0
        return endo, r

    endo, r = residual_field(phi)
    res_history = [float(np.max(np.abs(r)))]

    for it in range(max_iter):
        if res_history[-1] < problem.tol:
            break
        g_inv = endo.g_inv

        def project(v):
            return v - np.mean(v)

        def matvec(x):
            v = project(x.reshape(grid.shape))
            out = project(_apply_linearization(grid, g_inv, v))
            return out.ravel()

        def precond(x):
            v = project(x.reshape(grid.shape))
            out = poisson_solve(ScalarField(grid, v), chi.chi_inv).values
            return out.ravel()

        A = LinearOperator((npts, npts), matvec=matvec)
        M = LinearOperator((npts, npts), matvec=precond)
        b = project(-r).ravel()
        sol, info = gmres(A, b, M=M, rtol=LINEAR_RTOL, atol=0.0, maxiter=400)
        if info != 0:
            raise NonConvergenceError(
                f"inner linear solve failed (gmres info = {info})",
                last_residual=res_history[-1],
            )
        dphi = sol.reshape(grid.shape)
        dphi -= np.mean(dphi)

        # backtracking line search maintaining admissibility
        s = 1.0
        for _ in range(MAX_LINE_SEARCH):
            trial_vals = phi.values + s * dphi
            trial = ScalarField(grid, trial_vals - np.mean(trial_vals))
            try:
                endo_t, r_t = residual_field(trial)
            except AdmissibilityError:
                s *= ARMIJO_FACTOR
                continue
            if np.max(np.abs(r_t)) <= (1.0 - ARMIJO_SLOPE * s) * res_history[-1]:
                phi, endo, r = trial, endo_t, r_t
                res_history.append(float(np.max(np.abs(r))))
                break
            s *= ARMIJO_FACTOR
        else:
            raise NonConvergenceError(
                f"line search failed {MAX_LINE_SEARCH} times at Newton "
                f"iteration {it}",
                last_residual=res_history[-1],
            )
    else:
        if res_history[-1] >= problem.tol:
            raise NonConvergenceError(
                f"Newton did not reach tol {problem.tol} in {max_iter} iterations",
                last_residual=res_history[-1],
            )

    if return_history:
        return NewtonResult(phi, res_history, len(res_history) - 1)
    return phi
