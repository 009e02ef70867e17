"""Elastostatic calibration and compliance compensation for heavy 6R robots
with a spring gravity compensator.

Numerical hot paths run on a compiled extension when available; see
elastocal.backend.BACKEND for the active kernel backend.
"""

from .backend import BACKEND
from .compensation import AccuracyReport, compensated_target, evaluate_accuracy
from .design import ExperimentPlan, TestPose, optimize_plan, plan_criterion
from .geometry_fit import (
    MarkerTrace,
    fit_link_length,
    fit_pivot_point,
    identify_compensator_geometry,
)
from .identification import LoadedMeasurement, run_two_step_identification
from .kinematics import (
    Pose,
    RobotModel,
    forward_kinematics,
    hessian_load,
    jacobian_virtual,
    kr270_like,
    wrench,
)
from .simulator import GroundTruth, NoiseSpec
from .stiffness import (
    CompensatorModel,
    cartesian_stiffness,
    default_compensator,
    joint2_equivalent_stiffness,
    predict_deflection,
    spring_length,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "BACKEND",
    "CompensatorModel",
    "ExperimentPlan",
    "GroundTruth",
    "LoadedMeasurement",
    "MarkerTrace",
    "NoiseSpec",
    "Pose",
    "RobotModel",
    "TestPose",
    "cartesian_stiffness",
    "compensated_target",
    "default_compensator",
    "evaluate_accuracy",
    "fit_link_length",
    "fit_pivot_point",
    "forward_kinematics",
    "hessian_load",
    "identify_compensator_geometry",
    "jacobian_virtual",
    "joint2_equivalent_stiffness",
    "kr270_like",
    "optimize_plan",
    "plan_criterion",
    "predict_deflection",
    "run_two_step_identification",
    "spring_length",
    "wrench",
    "__version__",
]
