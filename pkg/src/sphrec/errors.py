"""Exception hierarchy shared by all modules.

Each class maps to one CLI exit code: ContractError -> 2,
DegenerateInputError -> 3, FormatError (and OSError) -> 4.
"""


class SphrecError(Exception):
    """Base class for all library errors."""


class ContractError(SphrecError, ValueError):
    """A precondition or type invariant was violated by the caller."""


class DegenerateInputError(SphrecError, ValueError):
    """Input is structurally valid but degenerate (empty mask, zero area, ...)."""


class FormatError(SphrecError, IOError):
    """A file does not conform to its declared on-disk format."""


class CorruptionError(FormatError):
    """A file's header and payload disagree (truncation, size mismatch)."""
