"""Exception types shared across the library."""


class LcnError(Exception):
    """Base class for all library errors."""


class FormatError(LcnError):
    """Tensor file has a bad magic string or malformed header."""


class UnsupportedDtype(LcnError):
    """Tensor file declares a dtype code this library does not support."""


class TruncationError(LcnError):
    """Tensor file payload is shorter than the header declares."""


class DataError(LcnError):
    """Tensor data contains NaN or Inf."""


class IoError(LcnError):
    """File could not be read or written."""


class DimError(LcnError):
    """Tensor dimensions are invalid."""


class GroupError(LcnError):
    """Channel count is not divisible by the requested group size."""


class RangeError(LcnError):
    """Window or index range is empty, inverted, or out of bounds."""


class ShapeError(LcnError):
    """Array shapes do not match the operation's contract."""


class StateError(LcnError):
    """Saved state (running stats, forward stats) is missing or inconsistent."""


class DegenerateInputError(LcnError):
    """Input variance too close to zero for a reliable numerical check."""
