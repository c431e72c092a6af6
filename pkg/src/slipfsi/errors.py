"""Exception types raised by the solver stack."""


class SlipFsiError(Exception):
    """Base class for all solver errors."""


class ContactViolation(SlipFsiError):
    """Shell displacement reaches (or breaks) the admissible radial bound."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ContactStop(SlipFsiError):
    """A run was stopped because contact margins were about to be violated."""

    def __init__(self, message, t_star):
        super().__init__(message)
        self.t_star = t_star


class InvalidCutoff(SlipFsiError):
    """Radial cutoff profile incompatible with the current displacement bound."""


class DegenerateMap(SlipFsiError):
    """det of the reference-to-deformed map gradient is not positive."""


class InvalidSlipLength(SlipFsiError):
    """Slip length must be strictly positive."""


class ZeroDenominator(SlipFsiError):
    """A ratio was requested for an identically-zero field."""


class EigensolverFailure(SlipFsiError):
    """Discrete Stokes eigenproblem did not produce the requested modes."""


class SingularSystem(SlipFsiError):
    """Time-step linear system is numerically singular."""


class NonConvergence(SlipFsiError):
    """Picard iteration hit max_iters before reaching tolerance."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class WidthSearchFailure(SlipFsiError):
    """No mollifier width meets the uniform-approximation bound."""


class ParseError(SlipFsiError):
    """Configuration file could not be parsed."""


class IoError(SlipFsiError):
    """Run artifacts could not be written."""
