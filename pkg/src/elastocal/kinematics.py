"""Serial 6R manipulator geometry, forward kinematics and derivatives.

Joint coordinates q and virtual spring deflections theta are plain float
arrays of shape (n,), radians. Wrenches are (6,) arrays [fx fy fz tx ty tz]
in N and N*m. The virtual springs sit in the actuated joints, so the chain
is evaluated at q + theta.
"""

import dataclasses

import numpy as np

from .backend import kernels
from .errors import JointLimitError, ModelInconsistencyError
from .se3 import transform

_DEFAULT_LIMITS = np.array([[-2.0 * np.pi, 2.0 * np.pi]])


def _frozen_array(values, shape=None):
    arr = np.array(values, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.flags.writeable = False
    return arr


@dataclasses.dataclass(frozen=True)
class Pose:
    """End-effector location: position (m) and proper rotation matrix."""

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen_array(self.position, (3,)))
        object.__setattr__(self, "rotation", _frozen_array(self.rotation, (3, 3)))
        R = self.rotation
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-12 or np.linalg.det(R) < 0:
            raise ModelInconsistencyError("pose rotation is not proper orthonormal")

    @property
    def transform(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.position
        return T


@dataclasses.dataclass(frozen=True)
class RobotModel:
    """Serial chain model: DH rows, base/tool transforms, markers, compliances.

    link_rows has one (a, alpha, d, theta0) row per joint, lengths in m and
    angles in rad. marker_offsets are tool-frame points carried rigidly by
    the end-effector. nominal_compliances are joint compliances in
    rad/(N*m).
    """

    link_rows: np.ndarray
    base_transform: np.ndarray = dataclasses.field(default_factory=lambda: np.eye(4))
    tool_transform: np.ndarray = dataclasses.field(default_factory=lambda: np.eye(4))
    marker_offsets: np.ndarray = dataclasses.field(
        default_factory=lambda: 0.05 * np.eye(3)
    )
    nominal_compliances: np.ndarray = None
    joint_limits: np.ndarray = None

    def __post_init__(self):
        rows = np.atleast_2d(np.array(self.link_rows, dtype=float))
        if rows.ndim != 2 or rows.shape[1] != 4:
            raise ModelInconsistencyError("link_rows must be (n, 4): a, alpha, d, theta0")
        n = rows.shape[0]
        if not np.all(np.isfinite(rows)):
            raise ModelInconsistencyError("link parameters must be finite")
        if np.any(rows[:, 0] < 0) or np.any(rows[:, 2] < 0):
            raise ModelInconsistencyError("link lengths a, d must be >= 0")
        object.__setattr__(self, "link_rows", _frozen_array(rows))

        compliances = self.nominal_compliances
        if compliances is None:
            compliances = np.full(n, 1e-6)
        compliances = np.array(compliances, dtype=float).reshape(n)
        if np.any(~np.isfinite(compliances)) or np.any(compliances <= 0):
            raise ModelInconsistencyError("nominal compliances must be finite and > 0")
        object.__setattr__(self, "nominal_compliances", _frozen_array(compliances))

        limits = self.joint_limits
        if limits is None:
            limits = np.repeat(_DEFAULT_LIMITS, n, axis=0)
        limits = np.array(limits, dtype=float).reshape(n, 2)
        if np.any(limits[:, 0] >= limits[:, 1]):
            raise ModelInconsistencyError("joint limits must satisfy lo < hi")
        object.__setattr__(self, "joint_limits", _frozen_array(limits))

        object.__setattr__(self, "base_transform", _frozen_array(self.base_transform, (4, 4)))
        object.__setattr__(self, "tool_transform", _frozen_array(self.tool_transform, (4, 4)))

        offsets = np.atleast_2d(np.array(self.marker_offsets, dtype=float))
        if offsets.shape[1] != 3 or not np.all(np.isfinite(offsets)):
            raise ModelInconsistencyError("marker offsets must be finite (k, 3)")
        if offsets.shape[0] >= 3:
            centered = offsets - offsets.mean(axis=0)
            if np.linalg.matrix_rank(centered, tol=1e-12) < 2:
                raise ModelInconsistencyError("3+ markers must be non-collinear")
        object.__setattr__(self, "marker_offsets", _frozen_array(offsets))

    @property
    def n_joints(self):
        return self.link_rows.shape[0]

    @property
    def n_markers(self):
        return self.marker_offsets.shape[0]

    def validate_q(self, q):
        q = np.asarray(q, dtype=float).reshape(self.n_joints)
        if not np.all(np.isfinite(q)):
            raise ModelInconsistencyError("joint values must be finite")
        for i in range(self.n_joints):
            lo, hi = self.joint_limits[i]
            if q[i] < lo or q[i] > hi:
                raise JointLimitError(i, q[i], lo, hi)
        return q

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _theta_or_zero(model, theta):
    if theta is None:
        return np.zeros(model.n_joints)
    theta = np.asarray(theta, dtype=float).reshape(model.n_joints)
    if not np.all(np.isfinite(theta)):
        raise ModelInconsistencyError("virtual deflections must be finite")
    return theta


def forward_kinematics(model, q, theta=None):
    """Tool pose and world marker positions at (q, theta).

    The chain is base @ links(q + theta) @ tool; markers are the tool-frame
    offsets mapped to the world frame.
    """
    q = model.validate_q(q)
    theta = _theta_or_zero(model, theta)
    T, markers = kernels.fk_pose_markers(
        model.link_rows, model.base_transform, model.tool_transform,
        q + theta, model.marker_offsets,
    )
    return Pose(T[:3, 3], T[:3, :3]), markers


def fk_jacobians(model, q, theta=None):
    """Pose, markers and Jacobians at the tool point and each marker.

    Returns (pose, markers, jac) with jac of shape (n_markers + 1, 6, n):
    jac[0] is the tool-point Jacobian, jac[1 + m] the Jacobian at marker m.
    All Jacobians are taken with respect to the virtual deflections theta.
    """
    q = model.validate_q(q)
    theta = _theta_or_zero(model, theta)
    T, markers, jac = kernels.fk_jacobians(
        model.link_rows, model.base_transform, model.tool_transform,
        q + theta, model.marker_offsets,
    )
    return Pose(T[:3, 3], T[:3, :3]), markers, jac


def jacobian_virtual(model, q, theta=None):
    """6 x n Jacobian of the tool pose twist w.r.t. the virtual deflections."""
    _, _, jac = fk_jacobians(model, q, theta)
    return jac[0]


def hessian_load(model, q, theta=None, wrench=None, step=1e-6):
    """Load Hessian H[i, j] = d(tau_i)/d(theta_j), symmetrized.

    tau(theta) = J(theta)^T F is the joint torque induced by the wrench;
    the derivative is taken by central differences of the analytic Jacobian
    and symmetrized, so H is the wrench-contracted second derivative of the
    chain geometry.
    """
    n = model.n_joints
    if wrench is None:
        return np.zeros((n, n))
    F = np.asarray(wrench, dtype=float).reshape(6)
    if not np.all(np.isfinite(F)):
        raise ModelInconsistencyError("wrench components must be finite")
    if not np.any(F):
        return np.zeros((n, n))
    theta = _theta_or_zero(model, theta)
    H = np.empty((n, n))
    for j in range(n):
        dt = np.zeros(n)
        dt[j] = step
        J_plus = jacobian_virtual(model, q, theta + dt)
        J_minus = jacobian_virtual(model, q, theta - dt)
        H[:, j] = (J_plus.T @ F - J_minus.T @ F) / (2.0 * step)
    return 0.5 * (H + H.T)


def wrench(force, torque=(0.0, 0.0, 0.0)):
    """Pack force (N) and torque (N*m) 3-vectors into a 6-vector."""
    w = np.concatenate([np.asarray(force, float).reshape(3),
                        np.asarray(torque, float).reshape(3)])
    if not np.all(np.isfinite(w)):
        raise ModelInconsistencyError("wrench components must be finite")
    return w


def planar_arm(*lengths, compliances=None, markers=None):
    """Planar nR arm in the xy plane, all joints about +z. Test workhorse."""
    lengths = [float(l) for l in lengths] or [1.0]
    rows = [(l, 0.0, 0.0, 0.0) for l in lengths]
    if markers is None:
        markers = np.zeros((1, 3))
    return RobotModel(
        link_rows=np.array(rows),
        marker_offsets=markers,
        nominal_compliances=compliances,
    )


def kr270_like(marker_offsets=None, compliances=None):
    """Heavy 6R model with roughly KR-270 scale geometry (reach ~2.6 m).

    Home (q = 0) points the arm out along +x with the wrist horizontal.
    Joint 2 is the compensator-loaded shoulder joint.
    """
    rows = np.array(
        [
            # a, alpha, d, theta0
            [0.350, -np.pi / 2, 0.675, 0.0],
            [1.150, 0.0, 0.0, 0.0],
            [0.041, -np.pi / 2, 0.0, -np.pi / 2],
            [0.0, np.pi / 2, 1.000, 0.0],
            [0.0, -np.pi / 2, 0.0, 0.0],
            [0.0, 0.0, 0.215, 0.0],
        ]
    )
    limits = np.deg2rad(
        np.array(
            [
                [-185.0, 185.0],
                [-145.0, 30.0],
                [-120.0, 156.0],
                [-350.0, 350.0],
                [-125.0, 125.0],
                [-350.0, 350.0],
            ]
        )
    )
    if marker_offsets is None:
        marker_offsets = np.array(
            [[0.120, 0.0, 0.030], [-0.060, 0.100, 0.030], [-0.060, -0.100, 0.030]]
        )
    if compliances is None:
        # Joint compliances in rad/(N*m); 1, 3..6 follow the identified
        # values for this robot class, joint 2 is a nominal placeholder
        # (the compensator model overrides it).
        compliances = np.array([0.623, 0.500, 0.416, 2.786, 3.483, 2.074]) * 1e-6
    return RobotModel(
        link_rows=rows,
        base_transform=transform(),
        # lateral tool offset keeps the tool point off the joint-6 axis,
        # otherwise pure forces cannot excite the wrist compliances
        tool_transform=transform(t=(0.100, 0.050, 0.120)),
        marker_offsets=marker_offsets,
        nominal_compliances=compliances,
        joint_limits=limits,
    )
