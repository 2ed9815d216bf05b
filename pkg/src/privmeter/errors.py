"""Exception hierarchy shared by the library and the command line tool.

Exit codes: 1 usage, 2 malformed or inconsistent data, 3 numeric failure.
"""


class PrivmeterError(Exception):
    """Base class; carries the process exit code for the CLI."""

    exit_code = 1


class UsageError(PrivmeterError):
    """Caller passed arguments that violate a precondition."""

    exit_code = 1


class DataError(PrivmeterError):
    """Input data is malformed, inconsistent or insufficient."""

    exit_code = 2


class EncodingError(DataError):
    """A genotype letter matches neither the major nor the minor allele."""

    def __init__(self, rsid, message):
        super().__init__(message)
        self.rsid = rsid


class NumericError(PrivmeterError):
    """A numeric routine failed to converge or produced a non-finite result."""

    exit_code = 3
