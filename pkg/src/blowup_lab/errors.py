"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures without a
lookup table: 1 for a failed mathematical check, 2 for bad input, 3 for a
numerical breakdown.
"""


class BlowupLabError(Exception):
    exit_code = 2


class InvalidParameter(BlowupLabError, ValueError):
    exit_code = 2


class DimensionTooSmall(InvalidParameter):
    pass


class ParseError(BlowupLabError, ValueError):
    exit_code = 2

    def __init__(self, position, message):
        self.position = position
        self.message = message
        super().__init__(f"{message} (at offset {position})")


class DomainError(BlowupLabError, ValueError):
    exit_code = 2


class NonFiniteResult(BlowupLabError, ArithmeticError):
    exit_code = 3


class NegativePotential(BlowupLabError, ValueError):
    exit_code = 2


class InvalidNonlinearity(BlowupLabError, ValueError):
    exit_code = 2


class UnboundedRatio(InvalidNonlinearity):
    pass


class SamplingFailure(BlowupLabError, ArithmeticError):
    exit_code = 3


class DivergentIntegral(BlowupLabError):
    exit_code = 1


class InvalidEnvelope(BlowupLabError, ValueError):
    exit_code = 2


class NoConvergence(BlowupLabError, ArithmeticError):
    exit_code = 3


class StepFailure(BlowupLabError, ArithmeticError):
    exit_code = 3


class SandwichViolation(BlowupLabError, AssertionError):
    exit_code = 1


class BoundViolation(BlowupLabError, AssertionError):
    exit_code = 1


class NonpositiveValues(BlowupLabError, ValueError):
    exit_code = 2
