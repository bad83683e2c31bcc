"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or unknown configuration input (CLI exit code 2)."""


class NumericalFailure(RuntimeError):
    """A simulation or solver failed a numerical sanity check (CLI exit code 3)."""


class FockTruncationError(NumericalFailure):
    """Population leaked into the top Fock level; the basis is too small."""


class PositivityError(NumericalFailure):
    """A density matrix developed an eigenvalue below the abort threshold."""


class BracketError(ValueError):
    """A root search was given a bracket that does not contain a sign change."""
