"""Exception types raised by the lab."""


class SmcLabError(Exception):
    """Base class for all errors raised by smclab."""


class SingularGain(SmcLabError):
    """A guarded control denominator fell below tolerance.

    ``which`` names the failing denominator (e.g. ``"b2"`` or ``"alpha1*b1+alpha2*b2"``).
    """

    def __init__(self, which, value, message=None):
        self.which = which
        self.value = value
        super().__init__(message or f"singular gain: |{which}| = {abs(value):.3e}")


class SingularInertia(SmcLabError):
    pass


class ZeroCoupling(SmcLabError):
    pass


class Uncontrollable(SmcLabError):
    pass


class SingularDesign(SmcLabError):
    pass


class Degenerate(SmcLabError):
    """A Routh pivot vanished; stability cannot be decided from the table."""


class ConfigError(SmcLabError):
    pass
