"""
Exception hierarchy; the CLI maps each branch to an exit code
"""


class SmkError(Exception):
    """Base class for toolkit errors"""

    exit_code = 1


class ConfigError(SmkError, ValueError):
    """Invalid parameters or incompatible options"""

    exit_code = 2


class DataError(SmkError):
    """Missing, corrupt or dimensionally incompatible data"""

    exit_code = 3


class CorruptFileError(DataError):
    """A tensor or metadata file failed validation"""


class SchemaVersionError(DataError):
    """Metadata written by a newer schema version"""


class SimulationError(SmkError):
    """One or more system-matrix columns failed to simulate"""

    exit_code = 3

    def __init__(self, message: str, positions: list | None = None):
        super().__init__(message)
        self.positions = positions or []


class SolverError(SmkError):
    """Numerical failure in a solver (NaN, non-convergence, empty selection)"""

    exit_code = 3
