"""Exception types shared across the package."""


class EnvironmentFileError(ValueError):
    """Raised when an environment file cannot be parsed or violates invariants.

    Carries the offending line number when one can be identified.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModeSolverError(RuntimeError):
    """Raised when the mode solver cannot produce a consistent mode set."""


class WarpDomainError(ValueError):
    """Raised when a signal's support is incompatible with a warping family."""


class MissingClusterTagError(LookupError):
    """Raised when the four-ray surface cluster is incomplete."""

    def __init__(self, missing_tags, family=None):
        tags = ", ".join(sorted(missing_tags))
        msg = f"four-ray cluster incomplete, missing tag(s): {tags}"
        if family is not None:
            msg += f" (deep-inversion family {family})"
        super().__init__(msg)
        self.missing_tags = tuple(sorted(missing_tags))


class MethodInapplicableError(RuntimeError):
    """Raised when an estimation method cannot be applied to the given geometry."""
