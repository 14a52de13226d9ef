"""Exception hierarchy shared by every module."""


class FoliationLabError(Exception):
    """Base class for all library errors."""


class SkewnessError(FoliationLabError, ValueError):
    def __init__(self, defect, tol):
        super().__init__(f"matrix is not skew-symmetric: defect {defect:.3e} > {tol:.1e}")
        self.defect = defect


class OrthogonalityError(FoliationLabError, ValueError):
    def __init__(self, defect, tol):
        super().__init__(f"matrix is not orthogonal: defect {defect:.3e} > {tol:.1e}")
        self.defect = defect


class SingularMatrixError(FoliationLabError, ValueError):
    def __init__(self, smallest, condition):
        super().__init__(
            f"matrix is numerically singular: smallest singular value {smallest:.3e}, "
            f"condition estimate {condition:.3e}"
        )
        self.smallest = smallest
        self.condition = condition


class BranchError(FoliationLabError, ValueError):
    """Logarithm requested too close to the cut locus (eigenvalue -1)."""


class DimensionError(FoliationLabError, ValueError):
    pass


class ConfigError(FoliationLabError, ValueError):
    """Invalid configuration. ``pointer`` is a JSON pointer to the offending field."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.message = message
        self.pointer = pointer


class ScopeError(FoliationLabError, ValueError):
    """A path leaves the leaves of the base foliation while only a leafwise connection is known."""


class DomainError(FoliationLabError, ValueError):
    pass


class NotBasedError(FoliationLabError, ValueError):
    def __init__(self, mismatch):
        super().__init__(f"loop is not based at the requested point: endpoint mismatch {mismatch:.3e}")
        self.mismatch = mismatch


class ConvergenceError(FoliationLabError, ArithmeticError):
    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class ComposabilityError(FoliationLabError, ValueError):
    pass


class ConditionViolation(FoliationLabError, ValueError):
    """A group element left the bundle of groups it must stay in."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class FreenessError(FoliationLabError, ValueError):
    pass


class NotInDomainError(FoliationLabError, ValueError):
    pass


class SamplerError(FoliationLabError, RuntimeError):
    pass
