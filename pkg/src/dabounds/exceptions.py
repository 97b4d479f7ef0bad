"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class DABoundsError(Exception):
    """Base class for all library errors."""


class ConfigurationError(DABoundsError, ValueError):
    """A domain spec, config file or typed parameter violates its invariants."""


class InvalidInputError(DABoundsError, ValueError):
    """Arguments are well-typed but inconsistent (shapes, empty data, ranges)."""


class DegenerateDesignError(InvalidInputError):
    """The normal equations of a least-squares fit are singular or ill-conditioned."""


class PreconditionError(InvalidInputError):
    """A theorem's precondition does not hold, e.g. xi <= D in symmetrization."""


class UnsupportedInputError(InvalidInputError):
    """The operation needs a kind of input it cannot work with (e.g. exact expectations)."""


class InvalidCertificateError(InvalidInputError):
    """A supplied bounded-difference certificate failed its spot check."""
