"""Exception types shared across the solver."""


class CmaflowError(Exception):
    """Base class for solver errors."""


class AdmissibilityError(CmaflowError):
    """The perturbed metric left the positivity cone (some eigenvalue of h
    dropped to or below the admissibility floor).

    Carries the worst offending grid point and eigenvalue.
    """

    def __init__(self, worst_value, worst_index):
        self.worst_value = float(worst_value)
        self.worst_index = tuple(int(i) for i in worst_index)
        super().__init__(
            f"metric not admissible: lambda_min = {self.worst_value:.6e} "
            f"at grid point {self.worst_index}"
        )


class ParabolicityError(CmaflowError):
    """The speed function fails F' > 0 somewhere on the operating range."""


class SpeedDomainError(CmaflowError):
    """Speed function evaluated at rho <= 0."""


class NonConvergenceError(CmaflowError):
    """An iteration exhausted its budget without meeting its tolerance."""

    def __init__(self, message, last_residual=None):
        self.last_residual = last_residual
        super().__init__(message)


class GridMismatchError(CmaflowError):
    """Fields on different grids were combined."""


class SingularReductionError(CmaflowError):
    """The beta -> exponent reduction hit a vanishing denominator."""


class ConfigError(CmaflowError):
    """Malformed run configuration; message names the offending key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key '{key}': {message}")
