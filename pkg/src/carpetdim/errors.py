"""Exception types shared across the package."""


class CarpetDimError(Exception):
    """Base class for all carpetdim errors."""


class FieldMismatch(CarpetDimError):
    """Operands belong to different number fields."""


class PrecisionUnreachable(CarpetDimError):
    """Interval refinement hit its iteration cap before reaching the target width."""


class NotContractive(CarpetDimError):
    """A contraction ratio lies outside (0, 1)."""


class OrderViolation(CarpetDimError):
    """The standing assumption alpha < beta fails."""


class TranslationOutOfBox(CarpetDimError):
    """A translation vector leaves the unit square."""


class RectangleOverlap(CarpetDimError):
    """Two first-level rectangles have overlapping interiors."""

    def __init__(self, i: int, j: int):
        super().__init__(f"open rectangles of maps {i} and {j} overlap")
        self.pair = (i, j)


class ParameterOutOfRange(CarpetDimError):
    """A parameter violates its documented range."""


class IndexOutOfRange(CarpetDimError):
    """A word contains a symbol outside the carpet alphabet."""


class BudgetExceeded(CarpetDimError):
    """An enumeration would exceed the configured budget."""


class ZeroBins(CarpetDimError):
    """A binned measure was requested with no bins."""


class NonpositiveQ(CarpetDimError):
    """Moment sums are only defined for q > 0."""


class DegenerateFit(CarpetDimError):
    """A regression was requested on degenerate data."""


class InsufficientTail(CarpetDimError):
    """Not enough large-q samples to fit the spectrum asymptote."""


class InsufficientScales(CarpetDimError):
    """Too few or too narrow a range of scales for a dimension fit."""


class PreconditionViolation(CarpetDimError):
    """An input tuple violates the dimension-bound chain; names the failing inequality."""


class ConflictingEvidence(CarpetDimError):
    """A user flag contradicts an exact certificate."""


class MissingS(CarpetDimError):
    """A report needs a value of s that was neither supplied nor computable."""


class ConfigError(CarpetDimError):
    """CLI configuration failed to parse or validate (exit code 2)."""


class InternalInvariantError(CarpetDimError):
    """An internal exactness invariant failed (exit code 4); always a bug."""
