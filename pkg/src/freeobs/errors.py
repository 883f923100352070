"""Exception hierarchy shared by every module of the package."""


class FreeObsError(Exception):
    """Base class for all package errors."""


class EmptyInstance(FreeObsError, ValueError):
    """A problem instance needs at least two arms."""


class InvalidArm(FreeObsError, ValueError):
    """An arm specification violates its parameter constraints."""


class IndexOutOfRange(FreeObsError, IndexError):
    """An arm index is outside ``range(K)``."""


class InvalidDistribution(FreeObsError, ValueError):
    """A probability vector is negative somewhere or does not sum to one."""


class DomainError(FreeObsError, ValueError):
    """A calculator was evaluated outside the domain of its formula."""


class PreconditionError(FreeObsError, ValueError):
    """A policy statistic was requested before its inputs were defined."""


class TooLarge(FreeObsError, RuntimeError):
    """The exact enumeration oracle exceeded its leaf budget."""


class ConfigError(FreeObsError, ValueError):
    """Invalid experiment configuration.

    ``path`` is the dotted location of the offending field (``policy.alpha``).
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)
