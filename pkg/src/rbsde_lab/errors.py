"""Exception hierarchy shared by every solver module."""


class RbsdeError(Exception):
    """Base class for all errors raised by rbsde_lab."""


class InvalidSpec(RbsdeError, ValueError):
    pass


class MissingBranchValue(RbsdeError, ValueError):
    pass


class UnknownMark(RbsdeError, KeyError):
    pass


class SingularGram(RbsdeError):
    """Regressors are linearly dependent under the branch measure of a node."""

    def __init__(self, message, regressors=()):
        super().__init__(message)
        self.regressors = tuple(regressors)


class NotCentered(RbsdeError, ValueError):
    pass


class TooManyPolicies(RbsdeError):
    def __init__(self, count, limit):
        super().__init__(f"{count} stopping policies exceed the limit of {limit}")
        self.count = count
        self.limit = limit


class NoConvergence(RbsdeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class EstimateViolated(RbsdeError):
    def __init__(self, lhs, rhs):
        super().__init__(f"a-priori estimate violated: lhs={lhs!r} > rhs={rhs!r}")
        self.lhs = lhs
        self.rhs = rhs


class MonotonicityViolated(RbsdeError):
    pass


class StepTooCoarse(RbsdeError, ValueError):
    pass


class InvalidStoppingTime(RbsdeError, ValueError):
    pass


class LuscViolated(RbsdeError):
    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = tuple(nodes)


class ReconstructionFailed(RbsdeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class FormulaViolated(RbsdeError):
    def __init__(self, message, worst_path, discrepancy):
        super().__init__(message)
        self.worst_path = worst_path
        self.discrepancy = discrepancy


class ConfigInvalid(RbsdeError, ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
