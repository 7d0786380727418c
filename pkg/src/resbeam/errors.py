"""Exception types raised across the simulator."""


class ResbeamError(Exception):
    """Base class for all simulator errors."""


class InvalidParameterError(ResbeamError, ValueError):
    pass


class DegenerateGeometryError(ResbeamError, ValueError):
    """Two elements coincide, so path length is zero."""


class NumericalDivergenceError(ResbeamError, ArithmeticError):
    pass


class SolverFailureError(ResbeamError, RuntimeError):
    pass


class DegeneratePilotError(ResbeamError, ValueError):
    pass


class InfeasiblePlanError(ResbeamError, ValueError):
    pass


class CapacityExceededError(ResbeamError, ValueError):
    pass


class ConfigError(ResbeamError, ValueError):
    """Raised with every violated constraint, each prefixed by its key."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
