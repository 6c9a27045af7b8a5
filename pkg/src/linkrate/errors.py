"""Exception types shared across the package.

Every error raised deliberately by this package derives from LinkrateError,
so callers (in particular the CLI) can catch one base class and turn it into
a clean exit instead of a traceback.
"""


class LinkrateError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class InputError(LinkrateError):
    """Malformed or inconsistent user-supplied data (files, arguments)."""

    code = "input"


class ConfigError(LinkrateError):
    """Invalid or unknown configuration content."""

    code = "config"


class GenerationError(LinkrateError):
    """Network generation could not satisfy its configuration."""

    code = "generation"


class CombinatorialGuardError(LinkrateError):
    """Exact enumeration was requested for an infeasibly large subset space."""

    code = "guard"


class NumericalError(LinkrateError):
    """A numerical invariant was violated beyond tolerance."""

    code = "numerical"
