"""Exception hierarchy shared by all crosscap modules.

Exit-code mapping used by the CLI: UsageError -> 2, DomainError (and
subclasses) -> 3, ConsistencyError -> 4.
"""


class CrosscapError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(CrosscapError):
    """Malformed input: bad DSL source, wrong arities, invalid options."""


class DomainError(CrosscapError):
    """Mathematically undefined request (sqrt of negative, 1/0, ...)."""


class DegeneracyError(DomainError):
    """A genericity hypothesis of the reduction fails (rank, 2-jet, c2=0)."""


class GenericityError(DomainError):
    """The deformation parameter cannot be normalized (d f33/ds (0,0) = 0)."""


class ConsistencyError(CrosscapError):
    """Two independent computation routes disagree beyond tolerance."""
