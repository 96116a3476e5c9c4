"""Exception hierarchy shared by the simulator modules."""


class CSqueezeError(Exception):
    """Base class for every error raised by the package."""


class InvalidDimensionError(CSqueezeError, ValueError):
    pass


class KindMismatchError(CSqueezeError, TypeError):
    pass


class LayoutMismatchError(CSqueezeError, ValueError):
    pass


class InvalidStateError(CSqueezeError, ValueError):
    pass


class TruncationError(CSqueezeError, ValueError):
    """The requested operator does not fit in the Fock truncation."""


class IntegrationError(CSqueezeError, RuntimeError):
    """An adaptive integrator could not reach the requested tolerance."""


class NonPhysicalStateError(CSqueezeError, RuntimeError):
    pass


class DegenerateCodeError(CSqueezeError, ValueError):
    pass


class InconsistentParametersError(CSqueezeError, ValueError):
    pass


class SpectrumAnomalyError(CSqueezeError, RuntimeError):
    pass


class SingularDerivativeError(CSqueezeError, ArithmeticError):
    pass


class LinearRegimeError(CSqueezeError, ValueError):
    pass


class ConfigError(CSqueezeError, ValueError):
    """Invalid run configuration (exit status 2 on the command line)."""
