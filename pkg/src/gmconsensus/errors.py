"""Exception hierarchy shared by all modules."""


class ConsensusError(Exception):
    """Base class for every error raised by this package."""


class InputError(ConsensusError, ValueError):
    pass


class EmptyInput(InputError):
    pass


class NonPositiveInput(InputError):
    pass


class NonPositiveState(NonPositiveInput):
    pass


class LengthMismatch(InputError):
    pass


class UnsupportedMetric(InputError):
    pass


class NotProbabilityVector(InputError):
    pass


class NotSymmetric(InputError):
    pass


class NotConnected(InputError):
    pass


class InvalidGraph(InputError):
    pass


class InvalidDegree(InvalidGraph):
    pass


class ZeroInDegree(InvalidGraph):
    def __init__(self, node):
        super().__init__(f"node {node} has zero in-degree")
        self.node = node


class NotStronglyConnected(InvalidGraph):
    pass


class NotBalanced(InvalidGraph):
    pass


class ParseError(InvalidGraph):
    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class DuplicateEdge(ParseError):
    pass


class NonPositiveWeight(ParseError):
    pass


class SineDomainViolation(InputError):
    pass


class NoConvergence(ConsensusError, RuntimeError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class StepUnderflow(ConsensusError, RuntimeError):
    pass


class InsufficientSamples(ConsensusError, ValueError):
    pass


class InfeasibleTarget(ConsensusError, ValueError):
    pass


class BadBracket(ConsensusError, ValueError):
    pass


class BoundViolation(ConsensusError, AssertionError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
