"""Exception hierarchy shared by every qholo module."""


class QholoError(Exception):
    """Base class for all library errors."""


class NonPositiveDistance(QholoError, ValueError):
    """A distance that must be strictly positive was zero or negative."""


class MissingTerm(QholoError, KeyError):
    """The requested power-law term is not part of the potential."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class OutOfHorizon(QholoError, ValueError):
    """A trajectory was queried outside its validity horizon."""


class QuadratureFailure(QholoError, ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


class NoRootFound(QholoError, ArithmeticError):
    """No sign change was found on the scan grid."""


class NotNormalized(QholoError, ValueError):
    """A state vector's norm deviates from one."""


class ConfigError(QholoError, ValueError):
    """An experiment configuration failed validation."""
