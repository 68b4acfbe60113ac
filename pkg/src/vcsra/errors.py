"""Exception hierarchy shared by all vcsra modules.

Two broad families matter for the CLI exit code: configuration/usage
problems (exit 2) and runtime/numeric failures (exit 1).
"""


class VcsraError(Exception):
    """Base class for all vcsra errors."""


class ConfigFamilyError(VcsraError):
    """Base for errors that indicate a bad configuration or usage (exit 2)."""


class RuntimeFamilyError(VcsraError):
    """Base for runtime / numeric failures (exit 1)."""


class DomainError(RuntimeFamilyError):
    """Argument outside the mathematical domain of an operation."""


class NonPowerOfTwo(ConfigFamilyError):
    """Hadamard order must be 1, 2, 4, 8, ..."""


class DimensionError(RuntimeFamilyError):
    """Array dimensions inconsistent with the operation's contract."""


class SingularMatrix(RuntimeFamilyError):
    """Matrix is rank deficient or too ill-conditioned to invert."""


class ModelMismatch(ConfigFamilyError):
    """Operation requested for a channel model that does not support it."""


class CodeTooShort(ConfigFamilyError):
    """Spreading code has fewer columns than there are assigned UEs."""


class AdmissionExhausted(RuntimeFamilyError):
    """Rejection sampler exceeded its attempt budget (threshold too small)."""


class DegenerateThreshold(RuntimeFamilyError):
    """Availability probability underflows; conditional moments undefined."""


class InfeasibleTarget(RuntimeFamilyError):
    """Calibration target outside the achievable range."""


class UnknownFigure(ConfigFamilyError):
    """Figure identifier not in the reproduction catalogue."""


class ConfigError(ConfigFamilyError):
    """Experiment specification is internally inconsistent."""


class ParseError(ConfigFamilyError):
    """Scenario file could not be parsed."""


class ValidationError(ConfigFamilyError):
    """Scenario violates a declared invariant."""
