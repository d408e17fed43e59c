"""Exception hierarchy for richards_optctl."""


class RichardsOptCtlError(Exception):
    """Base class for all package errors."""


class DomainError(RichardsOptCtlError, ValueError):
    """An argument lies outside the domain of a constitutive function."""


class InvalidBoundary(RichardsOptCtlError, ValueError):
    """Boundary data violate theta_r < value < theta_s."""


class PicardDivergence(RichardsOptCtlError, RuntimeError):
    """The inner fixed-point iteration failed to reach its tolerance."""

    def __init__(self, time_level, residual, iterations):
        self.time_level = time_level
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Picard iteration did not converge at time level {time_level} "
            f"after {iterations} iterations (last update {residual:.3e})"
        )


class LineSearchStall(RichardsOptCtlError, RuntimeError):
    """No trial step of the line search decreased the cost."""


class UnknownScenario(RichardsOptCtlError, KeyError):
    """Requested built-in scenario does not exist."""


class SchemaError(RichardsOptCtlError, ValueError):
    """A scenario document has unknown or missing keys."""


class ValidationError(RichardsOptCtlError, ValueError):
    """A scenario document breaks one or more invariants.

    Parameters
    ----------
    problems : list of str
        One message per violated field.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
