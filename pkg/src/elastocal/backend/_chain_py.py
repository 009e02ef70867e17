"""Pure numpy serial-chain kernels (fallback backend).

Link rows use the classic Denavit-Hartenberg convention (a, alpha, d,
theta0); joint i rotates about the z axis of the preceding frame by
angles[i] + theta0[i]. Semantics must match the compiled backend exactly.
"""

import numpy as np


def _dh_matrix(a, alpha, d, theta):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _walk_chain(links, base, tool, angles):
    """Accumulate the chain, recording joint origins and z axes."""
    n = links.shape[0]
    origins = np.empty((n, 3))
    axes = np.empty((n, 3))
    T = np.array(base, dtype=float)
    for i in range(n):
        origins[i] = T[:3, 3]
        axes[i] = T[:3, 2]
        a, alpha, d, theta0 = links[i]
        T = T @ _dh_matrix(a, alpha, d, angles[i] + theta0)
    return T @ np.asarray(tool, dtype=float), origins, axes


def fk_pose_markers(links, base, tool, angles, offsets):
    """Tool transform and world marker positions for given joint angles."""
    T, _, _ = _walk_chain(np.asarray(links, float), base, tool, np.asarray(angles, float))
    offs = np.asarray(offsets, dtype=float)
    markers = offs @ T[:3, :3].T + T[:3, 3]
    return T, markers


def fk_jacobians(links, base, tool, angles, offsets):
    """Pose, markers and geometric Jacobians at the tool and marker points.

    Returns (T, markers, jac) with jac of shape (k + 1, 6, n): jac[0] is
    taken at the tool point, jac[1 + m] at marker m. Column j holds
    [z_j x (p - o_j); z_j] for revolute joint j.
    """
    links = np.asarray(links, dtype=float)
    angles = np.asarray(angles, dtype=float)
    T, origins, axes = _walk_chain(links, base, tool, angles)
    offs = np.asarray(offsets, dtype=float)
    markers = offs @ T[:3, :3].T + T[:3, 3]
    targets = np.vstack([T[:3, 3][None, :], markers])
    n = links.shape[0]
    jac = np.empty((targets.shape[0], 6, n))
    for t in range(targets.shape[0]):
        r = targets[t][None, :] - origins
        jac[t, :3, :] = np.cross(axes, r).T
        jac[t, 3:, :] = axes.T
    return T, markers, jac
