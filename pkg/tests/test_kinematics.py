"""Forward kinematics and derivative checks against independent oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from elastocal.errors import JointLimitError, ModelInconsistencyError
from elastocal.kinematics import (
    RobotModel,
    forward_kinematics,
    fk_jacobians,
    hessian_load,
    jacobian_virtual,
    kr270_like,
    planar_arm,
    wrench,
)


def oracle_fk(model, angles):
    """Second, independent FK implementation: explicit Rz Tz Tx Rx products."""

    def rot_z(t):
        return np.array(
            [
                [np.cos(t), -np.sin(t), 0.0, 0.0],
                [np.sin(t), np.cos(t), 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )

    def rot_x(t):
        return np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, np.cos(t), -np.sin(t), 0.0],
                [0.0, np.sin(t), np.cos(t), 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )

    def trans(x, y, z):
        T = np.eye(4)
        T[:3, 3] = (x, y, z)
        return T

    T = np.array(model.base_transform)
    for (a, alpha, d, theta0), ang in zip(model.link_rows, angles):
        T = T @ rot_z(ang + theta0) @ trans(0, 0, d) @ trans(a, 0, 0) @ rot_x(alpha)
    return T @ np.array(model.tool_transform)


def rotation_log(R):
    cos_a = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos_a)
    if angle < 1e-12:
        return np.zeros(3)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return w / (2.0 * np.sin(angle)) * angle


def fd_jacobian(model, q, theta, h=1e-7):
    """Richardson-extrapolated central differences of the FK pose twist."""
    n = model.n_joints
    J = np.zeros((6, n))
    pose0, _ = forward_kinematics(model, q, theta)
    for j in range(n):
        cols = []
        for step in (h, 2 * h):
            dt = np.zeros(n)
            dt[j] = step
            pose_p, _ = forward_kinematics(model, q, theta + dt)
            pose_m, _ = forward_kinematics(model, q, theta - dt)
            dp = (pose_p.position - pose_m.position) / (2 * step)
            dr = (
                rotation_log(pose_p.rotation @ pose0.rotation.T)
                - rotation_log(pose_m.rotation @ pose0.rotation.T)
            ) / (2 * step)
            cols.append(np.concatenate([dp, dr]))
        J[:, j] = (4 * cols[0] - cols[1]) / 3.0
    return J


def test_planar_identity_case():
    arm = planar_arm(1.0)
    pose, _ = forward_kinematics(arm, [0.0])
    assert_allclose(pose.position, [1.0, 0.0, 0.0], atol=1e-15)


def test_planar_quarter_turn():
    arm = planar_arm(1.0)
    pose, _ = forward_kinematics(arm, [np.pi / 2])
    assert_allclose(pose.position, [0.0, 1.0, 0.0], atol=1e-15)


def test_fk_matches_independent_chain_oracle(kr_model):
    rng = np.random.default_rng(7)
    for _ in range(50):
        q = rng.uniform(kr_model.joint_limits[:, 0], kr_model.joint_limits[:, 1])
        theta = rng.normal(0.0, 1e-3, 6)
        pose, markers = forward_kinematics(kr_model, q, theta)
        T = oracle_fk(kr_model, q + theta)
        assert_allclose(pose.position, T[:3, 3], atol=1e-12)
        assert_allclose(pose.rotation, T[:3, :3], atol=1e-12)
        expected_markers = kr_model.marker_offsets @ T[:3, :3].T + T[:3, 3]
        assert_allclose(markers, expected_markers, atol=1e-12)


def test_paper_scale_reach(kr_model):
    pose, _ = forward_kinematics(kr_model, np.zeros(6))
    reach = np.linalg.norm(pose.position - kr_model.base_transform[:3, 3])
    assert 2.0 < reach < 3.2


def test_virtual_spring_reduction(kr_model):
    rng = np.random.default_rng(11)
    for _ in range(20):
        q = np.deg2rad(rng.uniform(-40, 20, 6))
        theta = rng.normal(0.0, 5e-3, 6)
        pose_a, mk_a = forward_kinematics(kr_model, q, theta)
        pose_b, mk_b = forward_kinematics(kr_model, q + theta, None)
        assert_allclose(pose_a.position, pose_b.position, atol=1e-14)
        assert_allclose(mk_a, mk_b, atol=1e-14)


def test_marker_rigidity(kr_model):
    rng = np.random.default_rng(13)
    ref = None
    for _ in range(30):
        q = np.deg2rad(rng.uniform(-40, 20, 6))
        theta = rng.normal(0.0, 5e-3, 6)
        _, markers = forward_kinematics(kr_model, q, theta)
        d = np.linalg.norm(markers[:, None, :] - markers[None, :, :], axis=-1)
        if ref is None:
            ref = d
        assert_allclose(d, ref, atol=1e-12)


def test_jacobian_matches_finite_differences(kr_model):
    rng = np.random.default_rng(17)
    for _ in range(100):
        q = np.deg2rad(rng.uniform(-40, 20, 6))
        theta = rng.normal(0.0, 2e-3, 6)
        J = jacobian_virtual(kr_model, q, theta)
        J_fd = fd_jacobian(kr_model, q, theta)
        assert np.linalg.norm(J - J_fd) <= 1e-6 * np.linalg.norm(J_fd)


def test_planar_jacobian_column():
    arm = planar_arm(0.8)
    J = jacobian_virtual(arm, [0.0])
    assert_allclose(J[:3, 0], [0.0, 0.8, 0.0], atol=1e-15)
    assert_allclose(J[3:, 0], [0.0, 0.0, 1.0], atol=1e-15)


def test_zero_length_link_column():
    arm = planar_arm(1.0, 0.0)
    q = np.array([0.3, 0.2])
    J = jacobian_virtual(arm, q)
    # zero-length distal link: its column comes from rotating the (empty)
    # downstream frames about the joint; check against FK perturbation
    h = 1e-7
    pose_p, _ = forward_kinematics(arm, q, [0.0, h])
    pose_m, _ = forward_kinematics(arm, q, [0.0, -h])
    fd = (pose_p.position - pose_m.position) / (2 * h)
    assert_allclose(J[:3, 1], fd, atol=1e-8)
    assert_allclose(J[:3, 1], 0.0, atol=1e-12)


def test_hessian_zero_wrench(kr_model):
    q = np.deg2rad([10, -50, 30, 15, -25, 40])
    H = hessian_load(kr_model, q, wrench=None)
    assert_allclose(H, 0.0, atol=0.0)
    H = hessian_load(kr_model, q, wrench=np.zeros(6))
    assert_allclose(H, 0.0, atol=0.0)


def test_hessian_symmetry(kr_model):
    rng = np.random.default_rng(19)
    for _ in range(5):
        q = np.deg2rad(rng.uniform(-40, 20, 6))
        F = wrench(rng.normal(0, 1000, 3), rng.normal(0, 100, 3))
        H = hessian_load(kr_model, q, wrench=F)
        assert np.max(np.abs(H - H.T)) == 0.0


def test_hessian_against_potential_second_difference():
    # 1R arm, tangential tip force: H equals d^2/dtheta^2 of f * position_y
    arm = planar_arm(1.3)
    f = 870.0
    F = wrench([0.0, f, 0.0])
    for q0 in (0.0, 0.4, -0.7):
        H = hessian_load(arm, [q0], wrench=F)
        h = 1e-5
        W = lambda t: f * forward_kinematics(arm, [q0], [t])[0].position[1]
        fd2 = (W(h) - 2 * W(0.0) + W(-h)) / h**2
        assert_allclose(H[0, 0], fd2, rtol=1e-4, atol=1e-6)


def test_hessian_against_torque_differences(kr_model):
    # independent check: central differences of tau = J^T F with a
    # different step, symmetrized
    rng = np.random.default_rng(23)
    q = np.deg2rad([5, -55, 25, 30, -45, 60])
    F = wrench(rng.normal(0, 1500, 3), rng.normal(0, 200, 3))
    H = hessian_load(kr_model, q, wrench=F)
    n = 6
    D = np.zeros((n, n))
    h = 3e-6
    for j in range(n):
        dt = np.zeros(n)
        dt[j] = h
        tau_p = jacobian_virtual(kr_model, q, dt).T @ F
        tau_m = jacobian_virtual(kr_model, q, -dt).T @ F
        D[:, j] = (tau_p - tau_m) / (2 * h)
    D = 0.5 * (D + D.T)
    assert_allclose(H, D, rtol=1e-5, atol=1e-4)


def test_joint_limit_violation(kr_model):
    q = np.zeros(6)
    q[1] = np.deg2rad(-170.0)
    with pytest.raises(JointLimitError) as exc:
        forward_kinematics(kr_model, q)
    assert exc.value.joint_index == 1


def test_pose_rejects_improper_rotation():
    from elastocal.kinematics import Pose

    R = np.eye(3)
    R[0, 0] = 1.0 + 1e-6
    with pytest.raises(ModelInconsistencyError):
        Pose(np.zeros(3), R)


def test_collinear_markers_rejected():
    offsets = np.array([[0.0, 0, 0], [0.05, 0, 0], [0.10, 0, 0]])
    with pytest.raises(ModelInconsistencyError):
        RobotModel(link_rows=np.array([[1.0, 0, 0, 0]]), marker_offsets=offsets)


def test_negative_link_length_rejected():
    with pytest.raises(ModelInconsistencyError):
        RobotModel(link_rows=np.array([[-0.2, 0, 0, 0]]))


def test_nonpositive_compliance_rejected():
    with pytest.raises(ModelInconsistencyError):
        RobotModel(link_rows=np.array([[1.0, 0, 0, 0]]), nominal_compliances=[0.0])


def test_fk_jacobians_consistency(kr_model):
    q = np.deg2rad([15, -45, 10, 25, -35, 50])
    pose, markers, jac = fk_jacobians(kr_model, q)
    assert jac.shape == (kr_model.n_markers + 1, 6, 6)
    assert_allclose(jac[0], jacobian_virtual(kr_model, q), atol=0.0)
    pose2, markers2 = forward_kinematics(kr_model, q)
    assert_allclose(markers, markers2, atol=0.0)
    assert_allclose(pose.position, pose2.position, atol=0.0)
