"""Exception types raised across the package.

Every error carries a short machine-readable ``kind`` so that the command
line layer can translate it into an exit code and an error document.
"""


class TvarSelectError(Exception):
    """Base class for all package errors."""

    kind = "error"
    exit_code = 1


class InputNotFoundError(TvarSelectError, FileNotFoundError):
    kind = "input-not-found"
    exit_code = 2


class InvalidSeriesError(TvarSelectError, ValueError):
    kind = "invalid-series"
    exit_code = 3


class WindowOutOfRangeError(TvarSelectError, ValueError):
    """A localized window would read data before index 1 or after the anchor."""

    kind = "window-out-of-range"
    exit_code = 3


class LagTooLargeError(TvarSelectError, ValueError):
    kind = "k-too-large"
    exit_code = 3


class InvalidSplitError(TvarSelectError, ValueError):
    kind = "invalid-split"
    exit_code = 3


class InsufficientDataError(TvarSelectError, ValueError):
    kind = "insufficient-data"
    exit_code = 3


class InvalidConfigError(TvarSelectError, ValueError):
    kind = "invalid-config"
    exit_code = 3


class EmptySegmentError(TvarSelectError, ValueError):
    kind = "empty-segment"
    exit_code = 3


class SingularWindowError(TvarSelectError, ArithmeticError):
    """The localized Toeplitz matrix is numerically singular."""

    kind = "singular-window"
    exit_code = 4


class AllCandidatesInfeasibleError(TvarSelectError, ArithmeticError):
    kind = "all-candidates-infeasible"
    exit_code = 4


class SimulationDivergedError(TvarSelectError, ArithmeticError):
    kind = "simulation-diverged"
    exit_code = 4

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"simulated path is non-finite at index {index}")


class UnstableTangentError(TvarSelectError, ArithmeticError):
    kind = "unstable-tangent"
    exit_code = 4


class SingularAveragedMatrixError(TvarSelectError, ArithmeticError):
    kind = "singular-averaged-matrix"
    exit_code = 4


class ThresholdsInapplicableError(TvarSelectError, ValueError):
    kind = "thresholds-inapplicable"
    exit_code = 3
