"""Exception types shared across modules."""

from __future__ import annotations


class DomainError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class UnsupportedComposition(ValueError):
    pass


class NotPPositioned(ValueError):
    def __init__(self, center, chart, reason: str = ""):
        super().__init__(f"center {center!r} is not p-positioned in chart {chart!r}" + (f": {reason}" if reason else ""))
        self.center = center
        self.chart = chart


class LiftLeavesAffineClass(ValueError):
    pass


class StepError(ValueError):
    """A resolution step failed; cause is the underlying NotPPositioned or LiftLeavesAffineClass."""

    def __init__(self, index: int, reason: str = "", cause: Exception | None = None):
        super().__init__(f"step {index} failed" + (f": {reason}" if reason else ""))
        self.index = index
        self.cause = cause

    @property
    def not_p_positioned(self) -> bool:
        return isinstance(self.cause, NotPPositioned)


class ChartCoverageError(ValueError):
    pass


class ModelError(ValueError):
    pass
