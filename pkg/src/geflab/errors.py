"""Exception types raised across the package."""


class GefLabError(Exception):
    """Base class for all geflab failures."""


class NotPositiveSemidefinite(GefLabError):
    pass


class SingularConditioning(GefLabError):
    pass


class NonFiniteSample(GefLabError):
    pass


class OrderTooHigh(GefLabError):
    pass


class RadiusTooLarge(GefLabError):
    pass


class OutsideStableDisk(GefLabError):
    pass


class SearchBudgetExceeded(GefLabError):
    pass


class DiskOutOfBounds(GefLabError):
    pass


class BudgetTooSmall(GefLabError):
    pass


class InsufficientSignal(GefLabError):
    pass


class DegenerateDiagonal(GefLabError):
    pass


class GridOutsideSignal(GefLabError):
    pass


class ConfigError(GefLabError):
    """Bad configuration file or value; carries the offending line when known."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
