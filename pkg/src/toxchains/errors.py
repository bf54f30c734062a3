"""Exception hierarchy shared by every stage of the pipeline."""


class ToxChainsError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ToxChainsError, ValueError):
    pass


class ParseError(ToxChainsError, ValueError):
    """A transcript or artifact record could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class EmptyEpisodeError(ParseError):
    pass


class MissingScoreError(ToxChainsError, ValueError):
    pass


class IntervalError(ToxChainsError, ValueError):
    pass


class SignalTooShortError(ToxChainsError, ValueError):
    pass


class UndefinedStatisticError(ToxChainsError, ValueError):
    pass


class UndefinedMetricError(ToxChainsError, ValueError):
    pass


class StageOrderError(ToxChainsError):
    """A pipeline stage was run before the stage producing its input."""


class ScorerError(ToxChainsError):
    pass


class MustSplitError(ScorerError, ValueError):
    """Text exceeds the scorer's token limit and has to be chunked first."""


class PermanentScorerError(ScorerError):
    pass


class TransientScorerError(ScorerError):
    pass
