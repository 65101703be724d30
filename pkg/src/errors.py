"""Error taxonomy shared by every bagforge module.

Precondition violations derive from ``ValueError`` so callers that only know
the standard library still catch them. The CLI maps each family to an exit code.
"""


class BagForgeError(Exception):
    """Base class for all bagforge errors."""


class ContractError(BagForgeError, ValueError):
    """A documented precondition was violated by the caller."""


class ShapeError(ContractError):
    """Operand shapes are incompatible."""


class NumericError(ContractError):
    """An input is outside the numeric domain of an operation (e.g. zero norm)."""


class UndefinedMetricError(ContractError):
    """A metric is undefined for the given labels."""


class DegenerateError(ContractError):
    """Input data carries no usable variation."""


class ReproducibilityError(BagForgeError):
    """Two evaluations that must agree bitwise did not."""


class TrainingError(BagForgeError):
    """Optimization cannot continue (e.g. a non-finite gradient)."""


class DataError(BagForgeError):
    """A dataset lacks data required by the requested operation."""


class FormatError(BagForgeError):
    """A binary file does not follow its declared format.

    Attributes:
        offset: Byte offset at which the problem was detected.
    """

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedVersionError(FormatError):
    """The file declares a format version this build cannot read."""
