"""Exception types shared across the package."""


class TomError(Exception):
    """Base class for every library error."""


class ZeroDeadline(TomError):
    """A deadline below one tick was supplied."""


class DuplicateId(TomError):
    """A time-out with the same (class_id, instance_id) is already listed."""


class NotFound(TomError):
    """No listed time-out carries the requested id."""


class ClockRegression(TomError):
    """A clock value smaller than one already observed was supplied."""


class Closed(TomError):
    """The time-out manager handle has been closed."""


class UnknownSender(TomError):
    """A message names a process outside the configured process set."""


class UnknownNode(TomError):
    """A node id outside the configured topology was referenced."""


class EmptyCandidateSet(TomError):
    """Election was attempted with no live candidates."""


class ConfigError(TomError):
    """A scenario configuration could not be parsed or validated."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")
