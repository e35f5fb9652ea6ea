"""Exception types shared across the pipeline."""


class CrosstrajError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(CrosstrajError):
    """Input file violates the documented layout (missing column, bad row...)."""


class ValidationError(CrosstrajError):
    """Inputs are well-formed but violate a precondition or invariant."""


class StateError(CrosstrajError):
    """Operation requested out of pipeline order (e.g. predict before train)."""


class NotFoundError(CrosstrajError):
    """A referenced entity (project, job, path, node) does not exist."""
