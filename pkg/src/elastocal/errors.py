"""Exception hierarchy shared by all elastocal modules.

Every exception carries a machine-readable ``category`` used by the CLI to
derive exit codes and structured error output.
"""


class ElastocalError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class ConfigError(ElastocalError):
    """Project or robot specification file is invalid."""

    category = "config"


class DataFormatError(ElastocalError):
    """A data file could not be parsed or violates its schema."""

    category = "data"


class MissingInputError(ElastocalError):
    """A CLI verb was invoked without a required input."""

    category = "usage"


class JointLimitError(ElastocalError):
    """Joint configuration outside the declared limits."""

    category = "data"

    def __init__(self, joint_index, value, lo, hi):
        self.joint_index = joint_index
        super().__init__(
            f"joint {joint_index + 1} value {value:.6g} rad outside "
            f"limits [{lo:.6g}, {hi:.6g}]"
        )


class SingularConfigurationError(ElastocalError):
    """Jacobian rank-deficient at the requested configuration."""

    category = "numerical"


class ConditioningError(ElastocalError):
    """A linear solve exceeded the condition number guard."""

    category = "numerical"


class ModelInconsistencyError(ElastocalError):
    """Model parameters produce a physically impossible quantity."""

    category = "data"


class DegenerateDataError(ElastocalError):
    """Measurement data carries no information about the fit target."""

    category = "data"


class IllConditionedPlanError(ElastocalError):
    """The identification regressor cannot separate the parameters."""

    category = "numerical"

    def __init__(self, condition_number, weakest_parameter):
        self.condition_number = condition_number
        self.weakest_parameter = weakest_parameter
        super().__init__(
            f"normal matrix condition number {condition_number:.3g} exceeds "
            f"guard; weakest direction: {weakest_parameter}"
        )


class InsufficientGroupsError(ElastocalError):
    """Too few distinct joint-2 groups for the compensator regression."""

    category = "data"


class InfeasiblePlanError(ElastocalError):
    """No feasible measurement plan exists on the candidate grid."""

    category = "numerical"
