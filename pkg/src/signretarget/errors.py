"""Exception and warning types shared across the package."""


class SignRetargetError(Exception):
    """Base class for all errors raised by this package."""


class MalformedRecord(SignRetargetError):
    """A JSONL record is structurally invalid (bad JSON, missing keys, bad frame order)."""

    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class LayoutMismatch(SignRetargetError):
    """A landmark block does not match the declared per-part joint counts."""


class EmptySequence(SignRetargetError):
    """An operation that needs at least one frame received none."""


class PartNeverDetected(SignRetargetError):
    """fill_missing found no detected frame for a part, so there is nothing to hold."""


class DegenerateShoulders(SignRetargetError):
    """Median shoulder (or shoulder-to-hip) distance is too small to define proportions."""


class DegenerateConfiguration(SignRetargetError):
    """Point configuration is rank deficient, leaving the aligning rotation ambiguous."""


class DimensionMismatch(SignRetargetError):
    """Point matrices that must agree in shape do not."""


class EmptyInput(SignRetargetError):
    """An aggregate operation received an empty collection."""


class ZeroAxisNorm(SignRetargetError):
    """An axis column has zero norm, so a per-axis scale is undefined."""


class NonPositiveScale(SignRetargetError):
    """A fitted per-axis scale came out non-positive."""


class InsufficientFrames(SignRetargetError):
    """Fewer usable frames than an estimator requires."""


class MissingLandmarks(SignRetargetError):
    """A required part is missing from a frame in strict mode."""


class LengthMismatch(SignRetargetError):
    """Two sequences or frame lists that must align in length do not."""


class TrackerInitError(SignRetargetError):
    """A tracker backend could not be initialized."""


class StageError(SignRetargetError):
    """A pipeline stage failed; partial outputs keep a .partial suffix."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class BoxExceedsFrameWarning(UserWarning):
    """A computed crop box extended past the frame and was clamped."""
