"""Exception types shared across the package.

Plain ``ValueError`` is used for bad arguments (dimension mismatches,
out-of-range parameters). The classes below cover the two failure modes
that need their own exit codes in the CLI.
"""


class DataError(Exception):
    """Raised when an input file cannot be parsed into a usable table."""


class NumericalError(RuntimeError):
    """Raised when a numerical routine fails to meet its accuracy contract.

    Carries the offending residual in ``residual`` when one is available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
