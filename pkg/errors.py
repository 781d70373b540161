"""Exception hierarchy for MGMC.

Every error carries a category used by the CLI to pick an exit code.
They also subclass ValueError so callers validating inputs can catch
them the usual way.
"""


class MgmcError(ValueError):
    """Base class for all library errors."""

    category = "contract"
    exit_code = 1


class DimensionError(MgmcError):
    """Operand shapes do not line up."""


class ContractError(MgmcError):
    """A documented precondition was violated."""


class BoundsError(MgmcError):
    """An index or slice falls outside its container."""


class DeterminismError(MgmcError):
    """Two evaluations that must agree did not."""


class NumericError(MgmcError):
    """Non-finite values or a solver that did not converge."""

    category = "numeric"
    exit_code = 4


class DataError(MgmcError):
    """Input data is malformed or cannot support the requested run."""

    category = "data"
    exit_code = 3


class IngestionError(DataError):
    """A row could not be ingested."""


class SchemaError(DataError):
    """The dataset schema is inconsistent with the file."""


class ConfigError(MgmcError):
    """A configuration value is outside its allowed range."""

    category = "config"
    exit_code = 2
