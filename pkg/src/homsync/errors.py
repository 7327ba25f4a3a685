"""Exception types raised by the simulator."""


class HomSyncError(Exception):
    """Base class for all simulator errors."""


class UnsupportedShapeError(HomSyncError, ValueError):
    pass


class InconsistentWidthsError(HomSyncError, ValueError):
    """A measured total width is smaller than its known components."""


class ToleranceUnreachableError(HomSyncError, ValueError):
    pass


class FilterTooWideError(HomSyncError, ValueError):
    """Filtered photon coherence would be shorter than the pump pulse."""


class UnsupportedStatisticsError(HomSyncError, ValueError):
    pass


class InsufficientDataError(HomSyncError, ValueError):
    pass


class FitDivergedError(HomSyncError, RuntimeError):
    pass


class BinningMismatchError(HomSyncError, ValueError):
    pass


class TruncationWarning(UserWarning):
    """Photon-number truncation error may exceed the documented bound."""
