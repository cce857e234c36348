"""Exception hierarchy for hard-rod dynamics."""


class HardRodError(ValueError):
    """Base class for all validation and dynamics errors raised by the package."""


class OrderViolation(HardRodError):
    """Positions are not in the ordered component (gaps below the rod diameter),
    or a velocity at contact is not pre-collisional."""


class OverlapViolation(HardRodError):
    """Two rods overlap: some pairwise distance is below the rod diameter."""


class DegenerateLine(HardRodError):
    """Two rods share both position and velocity, so they coincide forever."""


class BadDatum(HardRodError):
    """The datum leads to a simultaneous contact of three or more rods."""

    def __init__(self, message, datum_class=None):
        super().__init__(message)
        self.datum_class = datum_class


class TripleCollision(HardRodError):
    """The event-driven simulator met coincident events sharing a rod."""

    def __init__(self, message, time=None, pairs=()):
        super().__init__(message)
        self.time = time
        self.pairs = tuple(pairs)


class EmptyTarget(HardRodError):
    """A phase box has zero Liouville volume inside the ordered table."""


class RejectionStall(HardRodError):
    """Rejection sampling acceptance rate collapsed below the usable floor."""
