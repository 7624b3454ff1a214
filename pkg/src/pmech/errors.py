"""Exception types shared across the package."""


class PmechError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(PmechError, TypeError):
    pass


class RankMismatch(PmechError, ValueError):
    pass


class NotSymplectic(PmechError, ValueError):
    pass


class GridMismatch(PmechError, ValueError):
    pass


class BoxTooSmall(PmechError, ValueError):
    pass


class StepTooLarge(PmechError, ValueError):
    pass


class DegreeOverflow(PmechError, ValueError):
    pass


class NotConvolution(PmechError, ValueError):
    pass


class OutOfBox(PmechError, ValueError):
    pass


class InternalError(PmechError, RuntimeError):
    pass


class ConfigError(PmechError, ValueError):
    pass
