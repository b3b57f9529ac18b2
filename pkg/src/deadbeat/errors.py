"""Exception types shared across the package."""


class DeadbeatError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(DeadbeatError):
    pass


class NonFiniteResult(DeadbeatError):
    """Dynamics evaluation produced NaN or infinity."""


class ParseError(DeadbeatError):
    def __init__(self, message, line, column):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class EquilibriumViolation(DeadbeatError):
    """f(0, 0) is not the origin within tolerance."""


class InvalidGrid(DeadbeatError):
    pass


class InternalInconsistency(DeadbeatError):
    """A reachable cell has an empty candidate set: bug, not user error."""


class MetadataMismatch(DeadbeatError):
    """A feedback table was produced under a different configuration."""


class NonFiniteJacobian(DeadbeatError):
    pass


class SingularStep(DeadbeatError):
    """Jacobian rank collapsed below the state dimension mid-iteration."""


class NoConvergence(DeadbeatError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual
