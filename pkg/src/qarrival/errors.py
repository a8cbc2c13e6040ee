"""Exception types shared across the package."""


class QArrivalError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QArrivalError):
    """Invalid grid, ladder, schedule or scenario configuration."""


class DomainError(QArrivalError):
    """Argument outside the mathematical domain of an operation."""


class WraparoundError(QArrivalError):
    """Probability mass reached the periodic grid edge; results are tainted."""


class InstabilityError(QArrivalError):
    """Numerical evolution produced a norm increase beyond tolerance."""


class EnsembleInvalidError(QArrivalError):
    """Too many stalled trajectories for ensemble statistics to be meaningful."""
