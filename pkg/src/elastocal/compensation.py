"""Off-line compliance error compensation and accuracy evaluation.

Compensation mirrors the predicted deflection: the commanded target is
shifted by -Delta t so the loaded robot lands on the desired pose.
Accuracy statistics follow the distance-based residual convention
(position only); orientation effects are reported as a diagnostic.
"""

import dataclasses
import warnings

import numpy as np

from .errors import DegenerateDataError, MissingInputError
from .identification import collapse_repetitions
from .kinematics import forward_kinematics, jacobian_virtual
from .se3 import matrix_from_rotation_vector
from .stiffness import predict_deflection, predict_marker_deflections

DEFAULT_TRUST_RADIUS = 0.020  # m


class DeflectionClipWarning(UserWarning):
    pass


@dataclasses.dataclass
class CompensatedTarget:
    """Mirror-corrected Cartesian target and joint command."""

    position: np.ndarray
    rotation: np.ndarray
    q_corrected: np.ndarray
    deflection: np.ndarray
    clipped: bool


@dataclasses.dataclass
class AccuracyReport:
    """Per-configuration residuals and Table-style summary statistics."""

    residuals_before: np.ndarray
    residuals_after: np.ndarray
    max_before: float
    max_after: float
    rms_before: float
    rms_after: float
    improvement_factor: float
    compensated_fraction: float
    rotation_deflection_rms: float = 0.0


def _rms(x):
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def compensated_target(
    model, comp, q_target, wrench, include_hessian=False,
    trust_radius=DEFAULT_TRUST_RADIUS, damping=1e-6, refine=False,
    refine_tol=1e-7, max_refine=5,
):
    """Corrected Cartesian target and joint command for one pose/load.

    The predicted deflection is mirrored off the desired target. A
    position deflection beyond the trust radius is clipped to it (with a
    warning) rather than trusted. The joint correction uses one damped
    least-squares step; refine=True adds a short fixed-point polish of the
    joint command against the corrected Cartesian position.
    """
    q_target = model.validate_q(q_target)
    dt = predict_deflection(model, comp, q_target, wrench, include_hessian)
    clipped = False
    pos_norm = float(np.linalg.norm(dt[:3]))
    if pos_norm > trust_radius:
        warnings.warn(
            f"predicted deflection {pos_norm * 1e3:.2f} mm exceeds trust radius "
            f"{trust_radius * 1e3:.2f} mm; clipping",
            DeflectionClipWarning,
        )
        dt = dt * (trust_radius / pos_norm)
        clipped = True

    pose, _ = forward_kinematics(model, q_target)
    target_pos = pose.position - dt[:3]
    target_rot = matrix_from_rotation_vector(-dt[3:]) @ pose.rotation

    J = jacobian_virtual(model, q_target)
    J_pinv = J.T @ np.linalg.inv(J @ J.T + damping ** 2 * np.eye(6))
    q_corr = q_target - J_pinv @ dt

    if refine:
        for _ in range(max_refine):
            cur, _ = forward_kinematics(model, q_corr)
            err_pos = cur.position - target_pos
            if np.linalg.norm(err_pos) < refine_tol:
                break
            err = np.concatenate([err_pos, np.zeros(3)])
            Jc = jacobian_virtual(model, q_corr)
            Jc_pinv = Jc.T @ np.linalg.inv(Jc @ Jc.T + damping ** 2 * np.eye(6))
            q_corr = q_corr - Jc_pinv @ err

    return CompensatedTarget(
        position=target_pos,
        rotation=target_rot,
        q_corrected=q_corr,
        deflection=dt,
        clipped=clipped,
    )


def _check_disjoint(validation, identification):
    for _, qv, Fv, _, _ in validation:
        for _, qi, Fi, _, _ in identification:
            if np.allclose(qv, qi, atol=1e-9) and np.allclose(Fv, Fi, atol=1e-9):
                raise DegenerateDataError(
                    "validation configurations overlap the identification set"
                )


def evaluate_accuracy(validation, model, comp, identification_dataset=None,
                      include_hessian=False, anchor="model"):
    """Distance-based residual statistics before and after compensation.

    Per configuration: residual_before is the mean marker distance between
    the measured loaded positions and the rigid (no-compliance) prediction;
    residual_after measures the same against the prediction including the
    identified deflection model, which equals the residual remaining after
    mirror compensation.

    anchor='model' predicts the unloaded markers from the calibrated
    kinematics (residuals include any leftover geometric error);
    anchor='measured' anchors at the measured unloaded positions, which
    isolates the deflection-model error.
    """
    if not validation:
        raise MissingInputError("validation dataset is empty")
    if anchor not in ("model", "measured"):
        raise ValueError("anchor must be 'model' or 'measured'")
    collapsed = collapse_repetitions(validation)
    if identification_dataset:
        _check_disjoint(collapsed, collapse_repetitions(identification_dataset))

    before = []
    after = []
    rot_defl = []
    for _, q, F, unloaded, deflection in collapsed:
        measured_loaded = unloaded + deflection
        if anchor == "model":
            _, pred_unloaded = forward_kinematics(model, q)
        else:
            pred_unloaded = unloaded
        pred_defl = predict_marker_deflections(model, comp, q, F, include_hessian)
        d_before = np.linalg.norm(measured_loaded - pred_unloaded, axis=1)
        d_after = np.linalg.norm(measured_loaded - (pred_unloaded + pred_defl), axis=1)
        before.append(float(np.mean(d_before)))
        after.append(float(np.mean(d_after)))
        dt = predict_deflection(model, comp, q, F, include_hessian)
        rot_defl.append(float(np.linalg.norm(dt[3:])))

    before = np.asarray(before)
    after = np.asarray(after)
    rms_b, rms_a = _rms(before), _rms(after)
    improvement = rms_b / rms_a if rms_a > 0 else float("inf")
    fraction = 100.0 * (1.0 - rms_a / rms_b) if rms_b > 0 else 100.0
    return AccuracyReport(
        residuals_before=before,
        residuals_after=after,
        max_before=float(np.max(before)),
        max_after=float(np.max(after)),
        rms_before=rms_b,
        rms_after=rms_a,
        improvement_factor=improvement,
        compensated_fraction=fraction,
        rotation_deflection_rms=_rms(rot_defl),
    )
