"""Exception and warning types shared across the package."""


class NavError(Exception):
    """Base class for navigation-specific failures."""


class SingularLatitudeError(NavError):
    """Raised when an east-channel term divides by cos(lat) at a pole."""


class FilterDivergenceError(NavError):
    """Raised when the innovation matrix is numerically singular."""


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration input."""


class LogParseError(NavError):
    """Raised when a replay log cannot be parsed.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GimbalLockWarning(UserWarning):
    """Pitch within tolerance of +/-90 deg; yaw/roll split is degenerate."""


class LargeErrorAngleWarning(UserWarning):
    """Estimated misalignment too large for the small-angle correction."""
