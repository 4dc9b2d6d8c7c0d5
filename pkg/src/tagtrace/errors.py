"""Exception hierarchy.

Every error raised on bad input derives from :class:`TagTraceError`, which the
CLI maps to exit code 1.
"""


class TagTraceError(Exception):
    """Base class for input and validation errors."""


class MalformedLineError(TagTraceError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ConfigError(TagTraceError, ValueError):
    pass


class UnknownEntityError(TagTraceError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown entity"


class EmptyCommunityError(TagTraceError, ValueError):
    pass


class DegenerateInputError(TagTraceError, ValueError):
    pass


class RankDeficiencyError(TagTraceError, ValueError):
    pass


class ThresholdError(TagTraceError, ValueError):
    pass


class NoNeighborsError(TagTraceError, ValueError):
    pass


class SpanTooShortError(TagTraceError, ValueError):
    pass
