"""Phase-space mechanics on the Heisenberg group.

Classical and quantum observables are both kernels on the group; brackets,
quantisation and dynamics are computed exactly (``symbolic``) or on a
commensurate phase-space lattice (``grid``).  Submodules are imported on
demand so that thread limits can be set before numpy loads.
"""
from .errors import (BoxTooSmall, ConfigError, DegreeOverflow, DimensionMismatch,
                     GridMismatch, InternalError, NotConvolution, NotSymplectic,
                     OutOfBox, PmechError, RankMismatch, StepTooLarge)

__version__ = "0.1.0"

__all__ = [
    "BoxTooSmall", "ConfigError", "DegreeOverflow", "DimensionMismatch",
    "GridMismatch", "InternalError", "NotConvolution", "NotSymplectic",
    "OutOfBox", "PmechError", "RankMismatch", "StepTooLarge", "__version__",
]
