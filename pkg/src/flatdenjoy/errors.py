"""Exception types shared across modules."""


class FlatDenjoyError(Exception):
    """Base class for all library errors."""


class BreakpointNonSmooth(FlatDenjoyError):
    pass


class DegenerateOrbit(FlatDenjoyError):
    def __init__(self, j, orbit=None):
        super().__init__(f"image {j} of the interval degenerated to a point")
        self.j = j
        self.orbit = orbit or []


class HiddenFlatRegion(FlatDenjoyError):
    pass


class OrderMismatch(FlatDenjoyError):
    def __init__(self, declared, measured, where=None):
        super().__init__(f"declared tangency order {declared}, measured {measured}"
                         + (f" at {where}" if where is not None else ""))
        self.declared = declared
        self.measured = measured


class NotPeriodic(FlatDenjoyError):
    """A norm was requested on a difference that is not 1-periodic."""


class NotBracketed(FlatDenjoyError):
    pass


class PreconditionError(FlatDenjoyError, ValueError):
    pass


class RationalDetected(FlatDenjoyError):
    pass


class BudgetExceeded(FlatDenjoyError):
    pass


class InvariantRegression(FlatDenjoyError):
    pass


class ContainmentLost(FlatDenjoyError):
    pass


class LengthTooSmall(FlatDenjoyError, ValueError):
    pass


class PreimageEmpty(FlatDenjoyError):
    pass


class HitBudgetExceeded(FlatDenjoyError):
    pass


class StageRegression(FlatDenjoyError):
    def __init__(self, stage, failed, report=None):
        names = ", ".join(str(c) for c in failed)
        super().__init__(f"stage {stage}: condition(s) {names} failed")
        self.stage = stage
        self.failed = failed
        self.report = report


class InverseBranchAmbiguous(FlatDenjoyError):
    pass
