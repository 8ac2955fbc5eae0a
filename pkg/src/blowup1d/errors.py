"""Exception types shared across the package."""


class Blowup1dError(Exception):
    """Base class for all package errors."""


class IntervalError(Blowup1dError):
    """Malformed interval (lo > hi, NaN endpoint, disjoint intersect)."""


class DomainError(Blowup1dError):
    """Operand outside the mathematical domain of an operation."""


class ParamError(Blowup1dError):
    """Invalid or inconsistent construction parameters."""


class SingularSystem(Blowup1dError):
    """Collocation matrix numerically singular."""


class BoundMissing(Blowup1dError):
    """A required derivative bound was not supplied."""


class DivergentConstant(Blowup1dError):
    """Requested kernel constant is infinite for these parameters."""


class MissingConstant(Blowup1dError):
    """Constant table lacks an entry for the requested (kind, b, cell)."""


class SignViolation(Blowup1dError):
    """A sign certificate failed on a cell of a signed integral."""


class RegimeError(Blowup1dError):
    """Evaluation point violates the separation ratio of a far-field method."""


class DegenerateProfile(Blowup1dError):
    """Profile enclosure touches zero where a sign is required."""


class Diverged(Blowup1dError):
    """Time stepper residual grew far above its running minimum."""


class CFLViolation(Blowup1dError):
    """A characteristic crosses more than one cell per time step."""


class CacheMismatch(Blowup1dError):
    """Cached artifact does not match the current mesh/profile hashes."""


class FormatError(Blowup1dError):
    """Unparseable profile or report file."""


class VersionMismatch(Blowup1dError):
    """Persisted file was written by an incompatible format version."""


class NoBracket(Blowup1dError):
    """Root bracketing failed for the decay-exponent equation."""


class SeamError(Blowup1dError):
    """Far-field seam placed inside the spline support."""


class DenominatorVanishes(Blowup1dError):
    """Positive-part denominator encloses zero on a cell."""
