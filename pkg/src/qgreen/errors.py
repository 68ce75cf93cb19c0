"""Exception types shared across qgreen."""


class QGreenError(Exception):
    pass


class DomainError(QGreenError, ValueError):
    pass


class TruncationNotConverged(QGreenError, ArithmeticError):
    pass


class HypothesisViolation(QGreenError):
    pass


class NotConverged(QGreenError):
    pass


class NegativeInput(QGreenError, ValueError):
    pass


class ConfigError(QGreenError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class MonotonicityViolation(QGreenError, UserWarning):
    """Issued (as a warning) when solutions fail to increase with lambda."""
