# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled serial-chain kernels (hot path of the whole package).

Same contract as _chain_py: classic DH rows (a, alpha, d, theta0),
revolute joints about the local z axis.
"""

import numpy as np

from libc.math cimport cos, sin

DEF MAX_JOINTS = 32


cdef inline void _mat4_mul_dh(double T[4][4], double a, double alpha,
                              double d, double theta) nogil:
    # T <- T @ A(a, alpha, d, theta), A = Rz Tz Tx Rx
    cdef double ct = cos(theta)
    cdef double st = sin(theta)
    cdef double ca = cos(alpha)
    cdef double sa = sin(alpha)
    cdef double A[4][4]
    cdef double out[4][4]
    cdef int i, j, k

    A[0][0] = ct; A[0][1] = -st * ca; A[0][2] = st * sa; A[0][3] = a * ct
    A[1][0] = st; A[1][1] = ct * ca; A[1][2] = -ct * sa; A[1][3] = a * st
    A[2][0] = 0.0; A[2][1] = sa; A[2][2] = ca; A[2][3] = d
    A[3][0] = 0.0; A[3][1] = 0.0; A[3][2] = 0.0; A[3][3] = 1.0

    for i in range(4):
        for j in range(4):
            out[i][j] = 0.0
            for k in range(4):
                out[i][j] += T[i][k] * A[k][j]
    for i in range(4):
        for j in range(4):
            T[i][j] = out[i][j]


cdef inline void _mat4_mul(double T[4][4], const double[:, :] M) nogil:
    cdef double out[4][4]
    cdef int i, j, k
    for i in range(4):
        for j in range(4):
            out[i][j] = 0.0
            for k in range(4):
                out[i][j] += T[i][k] * M[k, j]
    for i in range(4):
        for j in range(4):
            T[i][j] = out[i][j]


cdef int _walk(const double[:, :] links, const double[:, :] base,
               const double[:, :] tool, const double[:] angles,
               double T[4][4], double origins[MAX_JOINTS][3],
               double axes[MAX_JOINTS][3]) nogil:
    cdef int n = links.shape[0]
    cdef int i, r
    if n > MAX_JOINTS:
        return -1
    for i in range(4):
        for r in range(4):
            T[i][r] = base[i, r]
    for i in range(n):
        for r in range(3):
            origins[i][r] = T[r][3]
            axes[i][r] = T[r][2]
        _mat4_mul_dh(T, links[i, 0], links[i, 1], links[i, 2],
                     angles[i] + links[i, 3])
    _mat4_mul(T, tool)
    return n


def fk_pose_markers(const double[:, :] links, const double[:, :] base, const double[:, :] tool,
                    const double[:] angles, const double[:, :] offsets):
    """Tool transform and world marker positions for given joint angles."""
    cdef double T[4][4]
    cdef double origins[MAX_JOINTS][3]
    cdef double axes[MAX_JOINTS][3]
    cdef int n = _walk(links, base, tool, angles, T, origins, axes)
    if n < 0:
        raise ValueError("too many joints for compiled backend")

    T_out = np.empty((4, 4))
    cdef double[:, ::1] Tv = T_out
    cdef int i, j
    for i in range(4):
        for j in range(4):
            Tv[i, j] = T[i][j]

    cdef int k = offsets.shape[0]
    markers = np.empty((k, 3))
    cdef double[:, ::1] mv = markers
    cdef int m
    for m in range(k):
        for i in range(3):
            mv[m, i] = (T[i][0] * offsets[m, 0] + T[i][1] * offsets[m, 1]
                        + T[i][2] * offsets[m, 2] + T[i][3])
    return T_out, markers


def fk_jacobians(const double[:, :] links, const double[:, :] base, const double[:, :] tool,
                 const double[:] angles, const double[:, :] offsets):
    """Pose, markers and geometric Jacobians at the tool and marker points.

    Returns (T, markers, jac) with jac of shape (k + 1, 6, n): jac[0] is
    taken at the tool point, jac[1 + m] at marker m.
    """
    cdef double T[4][4]
    cdef double origins[MAX_JOINTS][3]
    cdef double axes[MAX_JOINTS][3]
    cdef int n = _walk(links, base, tool, angles, T, origins, axes)
    if n < 0:
        raise ValueError("too many joints for compiled backend")

    T_out = np.empty((4, 4))
    cdef double[:, ::1] Tv = T_out
    cdef int i, j
    for i in range(4):
        for j in range(4):
            Tv[i, j] = T[i][j]

    cdef int k = offsets.shape[0]
    markers = np.empty((k, 3))
    cdef double[:, ::1] mv = markers
    cdef int m
    for m in range(k):
        for i in range(3):
            mv[m, i] = (T[i][0] * offsets[m, 0] + T[i][1] * offsets[m, 1]
                        + T[i][2] * offsets[m, 2] + T[i][3])

    jac = np.empty((k + 1, 6, n))
    cdef double[:, :, ::1] jv = jac
    cdef double px, py, pz, rx, ry, rz
    cdef int t
    for t in range(k + 1):
        if t == 0:
            px = T[0][3]; py = T[1][3]; pz = T[2][3]
        else:
            px = mv[t - 1, 0]; py = mv[t - 1, 1]; pz = mv[t - 1, 2]
        for j in range(n):
            rx = px - origins[j][0]
            ry = py - origins[j][1]
            rz = pz - origins[j][2]
            jv[t, 0, j] = axes[j][1] * rz - axes[j][2] * ry
            jv[t, 1, j] = axes[j][2] * rx - axes[j][0] * rz
            jv[t, 2, j] = axes[j][0] * ry - axes[j][1] * rx
            jv[t, 3, j] = axes[j][0]
            jv[t, 4, j] = axes[j][1]
            jv[t, 5, j] = axes[j][2]
    return T_out, markers, jac
