"""
Exceptions

Error hierarchy shared by the numerical modules and the command line.
"""

from typing import Any, Optional


class FracGroundError(Exception):
    """Base class for all package errors"""


class ConfigError(FracGroundError, ValueError):
    """Configuration file or override could not be parsed or validated"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        super().__init__(message)
        self.line = line
        self.field = field


class GridMismatchError(FracGroundError, ValueError):
    """Operator and grid function live on different grids"""


class PeriodificationError(FracGroundError, ValueError):
    """Input to a Fourier oracle does not decay at the grid ends"""


class HypothesisError(FracGroundError, ValueError):
    """Potential or weight violates a structural hypothesis"""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class ConvergenceError(FracGroundError, RuntimeError):
    """Numerical iteration failed to converge"""


class FiberingError(ConvergenceError):
    """No sign change of the fibering derivative could be bracketed"""
