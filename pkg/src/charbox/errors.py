"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class CharboxError(Exception):
    """Base class for all charbox errors."""

    exit_code = 2


class InputError(CharboxError, ValueError):
    """Invalid parameters: non-prime p, malformed box, unknown element, ..."""

    exit_code = 2


class PreconditionError(InputError):
    """A mathematical hypothesis required by an operation does not hold."""


class DegenerateShiftError(PreconditionError):
    """The shift box B0 collapsed to {0}."""


class RoutingError(PreconditionError):
    """A box was sent to a case whose side-length hypothesis it violates."""


class BudgetExceeded(CharboxError):
    """An enumeration would exceed its configured point budget."""

    exit_code = 3
