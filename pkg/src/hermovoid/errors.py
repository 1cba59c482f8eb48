class HermovoidError(Exception):
    """Base class for library errors."""


class FieldError(HermovoidError, ValueError):
    """Invalid field parameters, elements or subfield requests."""


class GeometryError(HermovoidError, ValueError):
    """Invalid points, lines or point sets."""


class GroupError(HermovoidError, ValueError):
    """Invalid group elements or subgroup parameters."""


class VerificationError(HermovoidError):
    """A construction that must produce an ovoid did not."""


class BudgetExceeded(HermovoidError, RuntimeError):
    """An enumeration would exceed its configured size cap."""
