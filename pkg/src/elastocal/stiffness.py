"""Compensator-aware stiffness model.

The gravity compensator is a passive spring closing a loop between links 1
and 2; it adds a configuration-dependent term to the joint-2 stiffness.
All other joints keep the constant stiffness 1/k_i from the robot model.
"""

import dataclasses

import numpy as np

from .errors import ConditioningError, ModelInconsistencyError, SingularConfigurationError
from .kinematics import fk_jacobians, hessian_load

COND_GUARD = 1e12
SINGULARITY_RTOL = 1e-10

# joint index (0-based) whose stiffness the compensator modifies
COMP_JOINT = 1


@dataclasses.dataclass(frozen=True)
class CompensatorModel:
    """Spring gravity compensator parameters.

    Geometry: L is the attachment lever |P1 P2|, (a_x, a_y) locates the
    spring pivot P0 in the compensator plane relative to the joint-2 axis
    P2. Derived: a = |P0 P2|, alpha = atan2(a_y, a_x). Stiffness: K_c is
    the spring rate (N/m), s_0 the unloaded spring length (m), K_theta2_0
    the intrinsic joint-2 stiffness (N*m/rad). cosine_sign switches the
    sign convention of the spring-length cosine term (+1 default).
    """

    L: float
    a_x: float
    a_y: float
    K_c: float
    s_0: float
    K_theta2_0: float
    cosine_sign: float = 1.0

    def __post_init__(self):
        if not (self.L > 0):
            raise ModelInconsistencyError("compensator lever L must be > 0")
        # a == 0 (pivot on the joint axis) is a valid degenerate limit:
        # s = L for all q2 and the compensator torque vanishes
        if self.a < 0 or not np.isfinite(self.a):
            raise ModelInconsistencyError("pivot distance a must be >= 0")
        if self.K_c < 0:
            raise ModelInconsistencyError("spring stiffness K_c must be >= 0")
        if not (self.s_0 > 0):
            raise ModelInconsistencyError("unloaded spring length s_0 must be > 0")
        if not (self.K_theta2_0 > 0):
            raise ModelInconsistencyError("intrinsic joint-2 stiffness must be > 0")
        if self.cosine_sign not in (1.0, -1.0):
            raise ModelInconsistencyError("cosine_sign must be +1 or -1")

    @property
    def a(self):
        return float(np.hypot(self.a_x, self.a_y))

    @property
    def alpha(self):
        return float(np.arctan2(self.a_y, self.a_x))


def default_compensator():
    """Compensator used by the synthetic pipelines (geometry from the
    identified KR-270 values, stiffness chosen to give a strong joint-2
    variation over the working q2 range)."""
    return CompensatorModel(
        L=0.18472, a_x=0.68593, a_y=0.12330,
        K_c=3.0e6, s_0=0.40, K_theta2_0=2.0e6,
    )


def spring_length(comp, q2):
    """Spring length s(q2) = sqrt(a^2 + L^2 + 2 a L cos(alpha - q2)).

    Accepts a scalar or an array of joint-2 values. The radicand is
    guarded: it cannot go negative for the + convention, but a degenerate
    parameter set could drive it to zero.
    """
    q2 = np.asarray(q2, dtype=float)
    a, L = comp.a, comp.L
    s_sq = a * a + L * L + comp.cosine_sign * 2.0 * a * L * np.cos(comp.alpha - q2)
    if np.any(s_sq <= 0):
        raise ModelInconsistencyError(
            "compensator geometry gives non-positive spring length"
        )
    s = np.sqrt(s_sq)
    return float(s) if np.isscalar(q2) or s.ndim == 0 else s


def joint2_equivalent_stiffness(comp, q2):
    """Equivalent joint-2 stiffness combining joint and compensator springs.

    K(q2) = K0 + Kc a L ((s0/s)((a L / s^2) sin^2(psi) + cos(psi)) - cos(psi))
    with psi = alpha - q2 and s the current spring length.
    """
    q2 = np.asarray(q2, dtype=float)
    s = np.asarray(spring_length(comp, q2))
    a, L = comp.a, comp.L
    psi = comp.alpha - q2
    c, s2 = np.cos(psi), np.sin(psi) ** 2
    K = comp.K_theta2_0 + comp.K_c * a * L * (
        (comp.s_0 / s) * ((a * L / s ** 2) * s2 + c) - c
    )
    return float(K) if K.ndim == 0 else K


def joint_stiffness_matrix(model, comp, q):
    """Diagonal of the joint stiffness matrix K_theta(q), N*m/rad.

    Entries are 1 / nominal compliance, with the compensator-loaded joint
    replaced by the configuration-dependent equivalent stiffness when a
    compensator is present.
    """
    q = model.validate_q(q)
    K = 1.0 / model.nominal_compliances.copy()
    if comp is not None and model.n_joints > COMP_JOINT:
        K[COMP_JOINT] = joint2_equivalent_stiffness(comp, q[COMP_JOINT])
    if np.any(K <= 0) or np.any(~np.isfinite(K)):
        raise ModelInconsistencyError("joint stiffness must be positive and finite")
    return K


def _wrench_array(wrench, default_zero=False):
    if wrench is None:
        if default_zero:
            return np.zeros(6)
        raise ModelInconsistencyError("wrench required")
    F = np.asarray(wrench, dtype=float).reshape(6)
    if not np.all(np.isfinite(F)):
        raise ModelInconsistencyError("wrench components must be finite")
    return F


def _check_singularity(J):
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] < SINGULARITY_RTOL * sv[0]:
        raise SingularConfigurationError(
            f"Jacobian singular value ratio {sv[-1] / sv[0]:.3g} below guard"
        )


def _inner_compliance_solve(model, comp, q, F, include_hessian, rhs):
    """Solve (K_theta - H) x = rhs with conditioning guard."""
    K = joint_stiffness_matrix(model, comp, q)
    A = np.diag(K)
    if include_hessian:
        A = A - hessian_load(model, q, wrench=F)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > COND_GUARD:
        raise ConditioningError(
            f"inner stiffness matrix condition number {cond:.3g} exceeds guard"
        )
    return np.linalg.solve(A, rhs)


def cartesian_compliance(model, comp, q, wrench=None, include_hessian=False):
    """6x6 Cartesian compliance J (K_theta - H)^-1 J^T at the tool point.

    Defined for any joint count (it is rank-deficient for chains with
    fewer than 6 joints). The wrench only matters when include_hessian
    is set.
    """
    q = model.validate_q(q)
    F = _wrench_array(wrench, default_zero=True)
    _, _, jac = fk_jacobians(model, q)
    J = jac[0]
    _check_singularity(J)
    X = _inner_compliance_solve(model, comp, q, F, include_hessian, J.T)
    C = J @ X
    if not include_hessian:
        C = 0.5 * (C + C.T)
    return C


def cartesian_stiffness(model, comp, q, wrench=None, include_hessian=False):
    """Cartesian stiffness K_C = (J (K_theta - H)^-1 J^T)^-1, 6x6.

    Requires a full 6-dof chain at a non-singular configuration; the
    compliance cannot be inverted otherwise.
    """
    if model.n_joints < 6:
        raise SingularConfigurationError(
            "Cartesian stiffness needs >= 6 joints; use cartesian_compliance"
        )
    C = cartesian_compliance(model, comp, q, wrench, include_hessian)
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > COND_GUARD:
        raise ConditioningError(
            f"Cartesian compliance condition number {cond:.3g} exceeds guard"
        )
    K_C = np.linalg.inv(C)
    if not include_hessian:
        K_C = 0.5 * (K_C + K_C.T)
    return K_C


def joint_deflections(model, comp, q, wrench, include_hessian=False):
    """Virtual joint deflections theta = (K_theta - H)^-1 J_tool^T F."""
    q = model.validate_q(q)
    F = _wrench_array(wrench)
    _, _, jac = fk_jacobians(model, q)
    J = jac[0]
    _check_singularity(J)
    return _inner_compliance_solve(model, comp, q, F, include_hessian, J.T @ F)


def predict_deflection(model, comp, q, wrench, include_hessian=False):
    """Tool pose deflection Delta t = J (K_theta - H)^-1 J^T F, shape (6,).

    Without the Hessian the map is linear in the wrench.
    """
    q = model.validate_q(q)
    F = _wrench_array(wrench)
    _, _, jac = fk_jacobians(model, q)
    J = jac[0]
    _check_singularity(J)
    theta = _inner_compliance_solve(model, comp, q, F, include_hessian, J.T @ F)
    return J @ theta


def predict_marker_deflections(model, comp, q, wrench, include_hessian=False):
    """First-order marker displacements under the wrench, shape (k, 3).

    The markers ride rigidly on the tool: each moves by its own Jacobian
    applied to the common joint deflection vector.
    """
    q = model.validate_q(q)
    F = _wrench_array(wrench)
    _, _, jac = fk_jacobians(model, q)
    J_tool = jac[0]
    _check_singularity(J_tool)
    theta = _inner_compliance_solve(model, comp, q, F, include_hessian, J_tool.T @ F)
    return np.einsum("kij,j->ki", jac[1:, :3, :], theta)
