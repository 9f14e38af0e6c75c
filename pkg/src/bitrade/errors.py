"""Exception hierarchy shared by every bitrade module."""


class BitradeError(Exception):
    """Base class for all library errors."""


class InfeasibleProfile(BitradeError):
    pass


class DegeneratePrice(BitradeError):
    """A zero price where the operation needs strictly positive prices."""


class OrientationViolated(BitradeError):
    """The state breaks the ``p2*q2 < p1*q1`` orientation.

    Call :func:`bitrade.zones.swap_regions` to relabel the regions, or use the
    dynamics entry points which do the swap internally.
    """


class DomainError(BitradeError):
    pass


class NoConvergence(BitradeError):
    pass


class PreconditionViolated(BitradeError):
    pass


class NonFinite(BitradeError):
    """A stochastic path left the admissible box."""


class ConfigError(BitradeError):
    pass
