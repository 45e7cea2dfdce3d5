"""Dilute (sparse) Wigner random matrices: simulation, exact moments and bounds."""

from .ensemble import EntryDistribution, EnsembleSpec, SparseSymmetricMatrix, sample_dilution_mask, sample_matrix
from .errors import (
    ConvergenceError,
    DiluteWignerError,
    InvalidParameterError,
    InvariantViolation,
    MissingMomentError,
    ResourceLimitError,
    UnsupportedClassError,
    UnsupportedDistributionError,
)

__version__ = "0.1.0"
