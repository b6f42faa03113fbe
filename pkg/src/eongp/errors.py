"""Exception hierarchy. Each top-level class maps to a CLI exit code."""


class EongpError(Exception):
    exit_code = 1


class ConfigError(EongpError):
    exit_code = 2


class OracleUnavailable(EongpError):
    """An oracle could not produce a valid answer. Scores are never substituted."""

    exit_code = 3


class PluginTimeout(OracleUnavailable):
    pass


class PluginProtocolError(OracleUnavailable):
    """Malformed JSON or a response missing required fields."""


class PluginIdMismatch(OracleUnavailable):
    """A response carried an id that matches no pending request."""


class PluginExited(OracleUnavailable):
    pass


class DataError(EongpError):
    exit_code = 4


class TrainingError(EongpError):
    """Surrogate training diverged (non-finite loss)."""


class RunLocked(ConfigError):
    """Another command holds the run directory's lock file."""
