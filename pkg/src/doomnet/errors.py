"""Exception hierarchy shared by all doomnet modules."""


class DoomnetError(Exception):
    """Base class for every error raised by this package."""


class NetSyntaxError(DoomnetError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NetValidationError(DoomnetError):
    """The net is well-formed text but violates a structural invariant."""


class NotEnabledError(DoomnetError):
    pass


class SafetyError(DoomnetError):
    """A reachable marking would put a second token on a place."""

    def __init__(self, marking, transition):
        self.marking = marking
        self.transition = transition
        super().__init__(f"net is not safe: firing {transition} at {{{', '.join(marking)}}} "
                         f"overlaps an already marked output place")


class ClosureError(DoomnetError):
    """The bad set is not closed under reachability."""

    def __init__(self, source, target):
        self.source = source
        self.target = target
        super().__init__(f"bad set not reachability-closed: {{{', '.join(source)}}} -> "
                         f"{{{', '.join(target)}}} leaves the set")


class BudgetExceeded(DoomnetError):
    pass


class ConfigurationError(DoomnetError):
    """An event set is not a configuration of the prefix it claims to belong to."""


class FamilyMismatch(DoomnetError):
    pass


class ScopeInconclusive(DoomnetError):
    """No minimally doomed extension inside the scope although doom is reachable."""
