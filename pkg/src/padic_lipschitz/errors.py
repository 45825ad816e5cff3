"""Exception hierarchy shared by every module of the package."""


class PadicError(ValueError):
    """Base class for all errors raised by this package."""


class IndeterminateValuation(PadicError):
    """An approximate value is indistinguishable from zero at its precision."""


class InsufficientPrecision(PadicError):
    """An operation needs more p-adic digits than the operand carries."""


class DivisionByZero(PadicError, ZeroDivisionError):
    pass


class ZeroClass(PadicError):
    """The zero angular class has no unit representative."""


class NoRoot(PadicError):
    pass


class AmbiguousRoot(PadicError):
    pass


class UnsupportedRamifiedRoot(PadicError):
    """Root extraction with p dividing the root index is not supported."""


class EmptyFiber(PadicError):
    pass


class ZeroCellHasNoBalls(PadicError):
    pass


class OutsideDomain(PadicError):
    pass


class NonIntegerOrder(PadicError):
    pass


class NotUnitLipschitz(PadicError):
    pass


class UnsupportedLambda(PadicError):
    pass


class DisagreementOnSharedDomain(PadicError):
    pass


class EmptyWindow(PadicError):
    pass


class EmptyDomain(PadicError):
    pass


class NotClosed(PadicError):
    """A nearest point was requested for a limit point outside the set."""


class SpecParseError(PadicError):
    pass


class OutsideRepresentablePrecision(PadicError):
    pass
