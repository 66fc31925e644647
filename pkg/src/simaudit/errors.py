"""Exception hierarchy shared by the library and the CLI.

Every error carries an exit code so the CLI can translate failures into
process status without inspecting types at each call site:

  2 - configuration problems (bad flags, malformed config file, bad k, ...)
  3 - data problems (missing files, malformed records, vocabulary mismatch)
  4 - numerical problems (degenerate inputs that make a result meaningless)
"""


class AuditError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(AuditError):
    exit_code = 2


class DataError(AuditError):
    exit_code = 3


class NumericalError(AuditError):
    exit_code = 4
