"""Exception types shared across the toolkit.

Every error raised deliberately by this package derives from DcgEvalError so
the command-line layer can map failures to a nonzero exit status without
catching unrelated bugs.
"""


class DcgEvalError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(DcgEvalError):
    """A model, policy, or experiment configuration is unusable."""


class DatasetError(DcgEvalError):
    """A logged dataset file or object is malformed."""


class FullSupportError(DcgEvalError):
    """An importance weight is undefined because logging exposure is zero."""


class EnumerationBoundError(DcgEvalError):
    """An exact enumeration was requested above its instance-size bound."""


class DegenerateDataError(DcgEvalError):
    """An aggregate is undefined for the given data (e.g. zero normalizer)."""


class UnsupportedPolicyError(DcgEvalError):
    """A deterministic-only operation was applied to a stochastic policy."""


class UndefinedStatisticError(DcgEvalError):
    """A statistic is undefined for the given series (e.g. zero variance)."""
