"""Exception hierarchy shared by every module of the kit."""


class AlgebroidKitError(Exception):
    """Base class for all errors raised by algebroid_kit."""


class DomainError(AlgebroidKitError, ArithmeticError):
    """An expression was evaluated outside its domain (ln of a non-positive
    number, division by zero)."""


class DimensionError(AlgebroidKitError, ValueError):
    """A point or spec has the wrong number of coordinates."""


class ParseError(AlgebroidKitError, ValueError):
    """Malformed s-expression or JSON description."""


class RankMismatch(AlgebroidKitError, ValueError):
    """A section does not have one coefficient per basis element."""


class ShapeError(AlgebroidKitError, ValueError):
    """Maps, matrices or forms whose shapes do not fit together."""


class DegreeError(AlgebroidKitError, ValueError):
    """Invalid form degree."""


class ConstraintViolation(AlgebroidKitError, ValueError):
    """A prolonged element does not satisfy rho(b) = T nu(v)."""


class NotProjectable(AlgebroidKitError, ValueError):
    """A vector field on the total space does not project onto rho(sigma)."""


class NotFibered(AlgebroidKitError, ValueError):
    """A map between total spaces does not cover the given base map."""


class NotAdmissible(AlgebroidKitError, ValueError):
    """A fiber map fails anchor compatibility rho' o Phi = T phi o rho."""


class LevelError(AlgebroidKitError, IndexError):
    """An ind-point refers to a level outside the direct system."""


class IncompatibleFamily(AlgebroidKitError, ValueError):
    """A per-level family is not compatible with the bonding maps."""


class DomainExit(AlgebroidKitError):
    """A trajectory left the domain of the vector field.

    Attributes:
      t: time of the last valid state.
      state: the last valid phase point.
    """

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class NonFinite(DomainExit):
    """The integrator produced inf or nan."""
