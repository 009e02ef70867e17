"""Small rigid-transform helpers used across the package.

Transforms are 4x4 homogeneous matrices, rotations 3x3 proper orthogonal.
Angles are radians, lengths meters.
"""

import numpy as np


def rotx(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def roty(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotz(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_matrix(roll, pitch, yaw):
    """Fixed-axis XYZ rotation: R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    return rotz(yaw) @ roty(pitch) @ rotx(roll)


def rpy_from_matrix(R):
    """Inverse of :func:`rpy_matrix` (pitch away from +-pi/2)."""
    pitch = np.arcsin(np.clip(-R[2, 0], -1.0, 1.0))
    roll = np.arctan2(R[2, 1], R[2, 2])
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return roll, pitch, yaw


def transform(R=None, t=None):
    """Assemble a 4x4 homogeneous transform from rotation and translation."""
    T = np.eye(4)
    if R is not None:
        T[:3, :3] = R
    if t is not None:
        T[:3, 3] = np.asarray(t, dtype=float)
    return T


def transform_rpy(x, y, z, roll=0.0, pitch=0.0, yaw=0.0):
    return transform(rpy_matrix(roll, pitch, yaw), (x, y, z))


def inverse_transform(T):
    R = T[:3, :3]
    Ti = np.eye(4)
    Ti[:3, :3] = R.T
    Ti[:3, 3] = -R.T @ T[:3, 3]
    return Ti


def apply_transform(T, points):
    """Apply a transform to one point (3,) or a stack of points (k, 3)."""
    p = np.asarray(points, dtype=float)
    return p @ T[:3, :3].T + T[:3, 3]


def rotation_vector(R):
    """Axis-angle vector of a rotation matrix (angle in [0, pi])."""
    cos_a = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos_a)
    if angle < 1e-12:
        return np.zeros(3)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if np.pi - angle < 1e-6:
        # near pi the antisymmetric part degenerates; use the symmetric part
        B = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.clip(np.diag(B), 0.0, None))
        axis[np.argmax(np.abs(w))] *= np.sign(w[np.argmax(np.abs(w))]) or 1.0
        signs = np.sign(w)
        signs[signs == 0] = 1.0
        axis = axis * signs
        axis /= np.linalg.norm(axis)
        return axis * angle
    return w / (2.0 * np.sin(angle)) * angle


def matrix_from_rotation_vector(v):
    """Rodrigues formula: rotation matrix for axis-angle vector v."""
    v = np.asarray(v, dtype=float).reshape(3)
    angle = np.linalg.norm(v)
    if angle < 1e-14:
        return np.eye(3)
    k = v / angle
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rigid_register(source, target):
    """Least-squares rigid transform mapping source points onto target.

    Standard SVD (Kabsch) solution with the determinant sign fix, so the
    result is always a proper rotation. Returns (R, t) with
    target ~= R @ source + t.
    """
    src = np.asarray(source, dtype=float)
    dst = np.asarray(target, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError("rigid_register expects matching (k, 3) point sets")
    c_src = src.mean(axis=0)
    c_dst = dst.mean(axis=0)
    H = (src - c_src).T @ (dst - c_dst)
    U, _, Vt = np.linalg.svd(H)
    D = np.eye(3)
    D[2, 2] = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    R = Vt.T @ D @ U.T
    t = c_dst - R @ c_src
    return R, t
