"""
Exception types for hamlearn
Each error carries the exit code the CLI reports for it
"""


class HamLearnError(Exception):
    """Base class for all hamlearn errors"""

    exit_code = 1


class ConfigError(HamLearnError, ValueError):
    """Experiment configuration could not be parsed or validated"""

    exit_code = 2


class SolverFailure(HamLearnError, RuntimeError):
    """The conic solver failed on one or more problems"""

    exit_code = 3


class OracleCapError(HamLearnError, ValueError):
    """Dense realization requested beyond the configured qubit cap"""

    exit_code = 4


class DimensionMismatch(HamLearnError, ValueError):
    """Operands act on different numbers of qubits"""


class NotPositiveDefinite(HamLearnError, ValueError):
    """A Gram or density matrix that must be positive definite is not"""


class MissingDecomposition(HamLearnError, ValueError):
    """A commuting-model check was requested on a model without a decomposition"""
