"""Exception hierarchy shared by the library and the command line.

Every error carries the process exit code the CLI reports for it.
"""
from __future__ import annotations


class PtBoundsError(Exception):
    exit_code: int = 2


class ShapeError(PtBoundsError, ValueError):
    """Dimension, length or index mismatch."""


class DomainError(PtBoundsError, ValueError):
    """Input outside a function's domain (non-Hermitian, negative entries, bad parameters)."""


class PreconditionError(PtBoundsError):
    """A construction's stated preconditions do not hold."""


class UncertifiableError(PtBoundsError):
    """No available result certifies the requested bound."""


class CombinatorialGuardError(PtBoundsError):
    """Canonical-class enumeration grew past the configured guard."""


class NumericalError(PtBoundsError):
    exit_code = 3
