"""
hamlearn
Certified Hamiltonian learning from Gibbs-state expectation values
"""

__version__ = "1.0.0"

from hamlearn.errors import (
    ConfigError,
    DimensionMismatch,
    HamLearnError,
    MissingDecomposition,
    NotPositiveDefinite,
    OracleCapError,
    SolverFailure,
)
from hamlearn.pauli import PauliString, commutes, multiply, to_dense

__all__ = [
    "ConfigError",
    "DimensionMismatch",
    "HamLearnError",
    "MissingDecomposition",
    "NotPositiveDefinite",
    "OracleCapError",
    "PauliString",
    "SolverFailure",
    "commutes",
    "multiply",
    "to_dense",
]
