"""Numerical solver and verification harness for parabolic complex
Monge-Ampere flows du/dt = F(e^{-f} det(I + grad grad u)) on flat Kahler
tori."""

from .endo import (
    BackgroundMetric,
    EndoField,
    aubin_yau_check,
    build_endo,
    linearized_coefficient,
)
from .errors import (
    AdmissibilityError,
    CmaflowError,
    ConfigError,
    GridMismatchError,
    NonConvergenceError,
    ParabolicityError,
    SingularReductionError,
    SpeedDomainError,
)
from .flow import (
    FlowResult,
    FlowState,
    StepPolicy,
    rhs,
    run_flow,
    stable_dt,
    step_imex,
    step_rk4,
)
from .geometry import (
    ComplexMatrixField,
    Grid,
    ScalarField,
    complex_hessian,
    integrate,
    laplacian,
    poisson_solve,
)
from .speed import SpeedFunction, beta_to_exponent
from .stationary import (
    StationaryProblem,
    compute_c0,
    residual,
    solve_n1,
    solve_newton,
)

__version__ = "0.1.0"
