"""Two-step elastostatic identification.

Step 0 registers base and tool transforms from unloaded marker data.
Step 1 solves the linear observation model for the extended compliance
vector, with one joint-2 compliance per distinct q2 group. Step 2
regresses the compensator stiffness parameters (K_theta2_0, K_c, s_0)
from the per-group joint-2 stiffnesses.
"""

import dataclasses

import numpy as np

from .errors import (
    DegenerateDataError,
    IllConditionedPlanError,
    InsufficientGroupsError,
    ModelInconsistencyError,
)
from .geometry_fit import GeometryFitResult
from .kinematics import fk_jacobians, forward_kinematics
from .se3 import apply_transform, inverse_transform, rigid_register, transform
from .stiffness import COMP_JOINT, CompensatorModel

Q2_GROUP_TOL = 1e-6
COND_GUARD_IDENT = 1e10


@dataclasses.dataclass
class LoadedMeasurement:
    """One repetition of a loaded/unloaded marker measurement."""

    config_id: int
    q: np.ndarray
    wrench: np.ndarray
    markers_unloaded: np.ndarray
    markers_loaded: np.ndarray
    repetition_id: int = 0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(-1)
        self.wrench = np.asarray(self.wrench, dtype=float).reshape(6)
        self.markers_unloaded = np.asarray(self.markers_unloaded, float).reshape(-1, 3)
        self.markers_loaded = np.asarray(self.markers_loaded, float).reshape(-1, 3)
        if self.markers_unloaded.shape != self.markers_loaded.shape:
            raise DegenerateDataError("marker counts differ between phases")
        if not (
            np.all(np.isfinite(self.markers_unloaded))
            and np.all(np.isfinite(self.markers_loaded))
        ):
            raise DegenerateDataError("marker coordinates must be finite")


@dataclasses.dataclass
class ExtendedCompliances:
    """Step-1 result: fixed compliances plus one k2 per q2 group."""

    k_fixed: dict
    k2_groups: list
    covariance: np.ndarray
    condition_number: float
    parameter_names: list
    sigma_hat: float
    serial_only: bool = False

    def full_vector(self):
        """Parameter vector in the documented ordering."""
        vals = []
        for name in self.parameter_names:
            if name.startswith("k2["):
                idx = int(name[3:-1].split("g")[1]) - 1
                vals.append(self.k2_groups[idx][1])
            else:
                vals.append(self.k_fixed[name])
        return np.array(vals)


@dataclasses.dataclass
class Joint2Regression:
    """Step-2 result: compensator stiffness parameters from Eq-style rows."""

    K_theta2_0: float
    K_c: float
    s_0: float
    covariance: np.ndarray
    residual_rms: float


def collapse_repetitions(dataset):
    """Average repeated measurements per configuration.

    Returns a list of (config_id, q, wrench, unloaded_mean, deflection_mean)
    in first-appearance order; deflection is loaded - unloaded.
    """
    if not dataset:
        raise DegenerateDataError("empty measurement dataset")
    order = []
    buckets = {}
    for meas in dataset:
        key = meas.config_id
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        else:
            ref = buckets[key][0]
            if not (
                np.allclose(ref.q, meas.q, atol=1e-12)
                and np.allclose(ref.wrench, meas.wrench, atol=1e-9)
            ):
                raise DegenerateDataError(
                    f"config {key}: repetitions disagree on q or wrench"
                )
        buckets[key].append(meas)
    collapsed = []
    for key in order:
        reps = buckets[key]
        unloaded = np.mean([r.markers_unloaded for r in reps], axis=0)
        deflection = np.mean(
            [r.markers_loaded - r.markers_unloaded for r in reps], axis=0
        )
        collapsed.append((key, reps[0].q, reps[0].wrench, unloaded, deflection))
    return collapsed


def group_q2(values, tol=Q2_GROUP_TOL):
    """Cluster joint-2 values within tol. Returns (group_ids, group_values)."""
    values = np.asarray(values, dtype=float)
    group_values = []
    group_ids = np.empty(values.size, dtype=int)
    for i, v in enumerate(values):
        for g, gv in enumerate(group_values):
            if abs(v - gv) <= tol:
                group_ids[i] = g
                break
        else:
            group_values.append(v)
            group_ids[i] = len(group_values) - 1
    return group_ids, np.array(group_values)


def observation_matrix(model, q, wrench):
    """Per-marker observation blocks of the linear identification model.

    Column j of the block for marker m is the position part of the marker
    Jacobian column j scaled by the joint torque tau_j = J_tool[:, j] . F,
    so that block @ k gives the first-order marker displacement for joint
    compliances k. Shape (n_markers, 3, n_joints); columns follow the
    serial joint order (the q2 regrouping happens at stacking time).
    """
    from .stiffness import _check_singularity

    F = np.asarray(wrench, dtype=float).reshape(6)
    _, _, jac = fk_jacobians(model, q)
    _check_singularity(jac[0])
    tau = jac[0].T @ F
    return jac[1:, :3, :] * tau[None, None, :]


def parameter_layout(n_joints, n_groups, serial_only=False):
    """Column layout of the extended parameter vector.

    Ordering: [k1, k2[g1] .. k2[g_mq], k3 .. kn]. In serial mode there is
    a single constant k2 column. Returns (names, column_of_joint) where
    column_of_joint maps a serial joint index to its column for a given
    group (grouped joint handled separately by the caller).
    """
    if serial_only or n_joints <= COMP_JOINT:
        n_groups = 1
    names = []
    for j in range(n_joints):
        if j == COMP_JOINT and n_joints > COMP_JOINT:
            if serial_only:
                names.append("k2")
            else:
                names.extend(f"k2[g{g + 1}]" for g in range(n_groups))
        else:
            names.append(f"k{j + 1}")
    return names


def _expand_block(block, group_id, n_groups, n_joints, serial_only):
    """Regroup the joint-2 column of a stacked (rows, n) block into the
    extended (rows, p) layout."""
    rows = block.shape[0]
    if serial_only or n_joints <= COMP_JOINT:
        return block
    p = n_joints - 1 + n_groups
    out = np.zeros((rows, p))
    out[:, :COMP_JOINT] = block[:, :COMP_JOINT]
    out[:, COMP_JOINT + group_id] = block[:, COMP_JOINT]
    out[:, COMP_JOINT + n_groups:] = block[:, COMP_JOINT + 1:]
    return out


def identify_extended_compliances(
    dataset, model, grouping_tol=Q2_GROUP_TOL, serial_only=False,
    cond_guard=COND_GUARD_IDENT,
):
    """Least-squares solve of the extended compliance vector.

    Deflections are averaged over repetitions per configuration, stacked
    into the regrouped observation model and solved through the normal
    equations. Raises IllConditionedPlanError (naming the weakest
    parameter direction) when the plan cannot separate the parameters.
    """
    collapsed = collapse_repetitions(dataset)
    n = model.n_joints
    if n > COMP_JOINT and not serial_only:
        q2s = [q[COMP_JOINT] for _, q, _, _, _ in collapsed]
        group_ids, group_values = group_q2(q2s, grouping_tol)
        n_groups = group_values.size
    else:
        group_ids = np.zeros(len(collapsed), dtype=int)
        group_values = np.array([np.nan])
        n_groups = 1
    names = parameter_layout(n, n_groups, serial_only)
    p = len(names)

    rows = []
    rhs = []
    for idx, (_, q, F, _, deflection) in enumerate(collapsed):
        blocks = observation_matrix(model, q, F)
        stacked = blocks.reshape(-1, n)
        rows.append(_expand_block(stacked, group_ids[idx], n_groups, n, serial_only))
        rhs.append(deflection.reshape(-1))
    R = np.vstack(rows)
    y = np.concatenate(rhs)
    if R.shape[0] < p:
        raise IllConditionedPlanError(np.inf, names[-1])

    M = R.T @ R
    w, V = np.linalg.eigh(M)
    cond = np.inf if w[0] <= 0 else w[-1] / w[0]
    if cond > cond_guard:
        weakest = names[int(np.argmax(np.abs(V[:, 0])))]
        raise IllConditionedPlanError(cond, weakest)
    k = np.linalg.solve(M, R.T @ y)

    resid = y - R @ k
    dof = max(1, y.size - p)
    sigma_sq = float(resid @ resid) / dof
    covariance = sigma_sq * np.linalg.inv(M)

    if np.any(k <= 0):
        bad = names[int(np.argmin(k))]
        raise ModelInconsistencyError(
            f"identified compliance {bad} is not positive; data inconsistent"
        )

    k_fixed = {}
    k2_groups = []
    col = 0
    for j in range(n):
        if j == COMP_JOINT and n > COMP_JOINT:
            if serial_only:
                k_fixed["k2"] = float(k[col])
                k2_groups.append((float(group_values[0]), float(k[col])))
                col += 1
            else:
                for g in range(n_groups):
                    k2_groups.append((float(group_values[g]), float(k[col])))
                    col += 1
        else:
            k_fixed[f"k{j + 1}"] = float(k[col])
            col += 1
    return ExtendedCompliances(
        k_fixed=k_fixed,
        k2_groups=k2_groups,
        covariance=covariance,
        condition_number=float(cond),
        parameter_names=names,
        sigma_hat=float(np.sqrt(sigma_sq)),
        serial_only=serial_only,
    )


def _geometry_triple(geometry):
    if isinstance(geometry, GeometryFitResult):
        return geometry.L, geometry.a_x, geometry.a_y
    if isinstance(geometry, CompensatorModel):
        return geometry.L, geometry.a_x, geometry.a_y
    L, a_x, a_y = geometry
    return float(L), float(a_x), float(a_y)


def regress_joint2_parameters(k2_groups, geometry, cosine_sign=1.0):
    """Fit (K_theta2_0, K_c, s_0) to per-group joint-2 stiffnesses.

    Builds one regression row per q2 group from the compensator geometry,
    solves the 3-parameter linear system for [K0, Kc, s0*Kc] and extracts
    s_0 by division. A vanishing K_c yields the compensator-absent result
    with s_0 = None.
    """
    if len(k2_groups) < 3:
        raise InsufficientGroupsError(
            f"need >= 3 distinct q2 groups, got {len(k2_groups)}"
        )
    L, a_x, a_y = _geometry_triple(geometry)
    a = float(np.hypot(a_x, a_y))
    alpha = float(np.arctan2(a_y, a_x))

    q2 = np.array([g[0] for g in k2_groups], dtype=float)
    k2 = np.array([g[1] for g in k2_groups], dtype=float)
    if np.any(k2 <= 0):
        raise ModelInconsistencyError("joint-2 compliances must be positive")
    K2 = 1.0 / k2

    psi = alpha - q2
    s_sq = a * a + L * L + cosine_sign * 2.0 * a * L * np.cos(psi)
    if np.any(s_sq <= 0):
        raise ModelInconsistencyError("geometry gives non-positive spring length")
    s = np.sqrt(s_sq)
    C = np.column_stack(
        [
            np.ones_like(psi),
            -a * L * np.cos(psi),
            (a * L / s) * ((a * L / s_sq) * np.sin(psi) ** 2 + np.cos(psi)),
        ]
    )
    M = C.T @ C
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e14:
        raise DegenerateDataError("q2 groups are collinear for the regression")
    x = np.linalg.solve(M, C.T @ K2)

    resid = K2 - C @ x
    dof = max(1, q2.size - 3)
    covariance = (float(resid @ resid) / dof) * np.linalg.inv(M)

    K0, Kc, s0Kc = x
    if abs(Kc) <= 1e-12 * max(abs(K0), 1.0):
        Kc, s0 = 0.0, None
    else:
        s0 = float(s0Kc / Kc)
    return Joint2Regression(
        K_theta2_0=float(K0),
        K_c=float(Kc),
        s_0=s0,
        covariance=covariance,
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
    )


def register_base_tool(dataset, model, max_iter=100, tol=1e-13):
    """Least-squares rigid base/tool registration from unloaded markers.

    Alternates pooled Procrustes fits of a world-frame base correction and
    a tool-frame correction until the increments vanish. Returns
    (base_correction, tool_correction, corrected_model) with
    base' = base_correction @ base and tool' = tool @ tool_correction.
    """
    collapsed = collapse_repetitions(dataset)
    base_corr = np.eye(4)
    tool_corr = np.eye(4)
    current = model
    measured = np.vstack([u for _, _, _, u, _ in collapsed])
    offsets_rep = np.vstack([model.marker_offsets for _ in collapsed])
    for _ in range(max_iter):
        poses = [forward_kinematics(current, q)[1] for _, q, _, _, _ in collapsed]
        predicted = np.vstack(poses)
        R_b, t_b = rigid_register(predicted, measured)
        inc_b = transform(R_b, t_b)
        base_corr = inc_b @ base_corr
        current = model.replace(
            base_transform=base_corr @ model.base_transform,
            tool_transform=model.tool_transform @ tool_corr,
        )

        tool_pts = []
        for (_, q, _, u, _) in collapsed:
            pose, _ = forward_kinematics(current, q)
            tool_pts.append(apply_transform(inverse_transform(pose.transform), u))
        R_t, t_t = rigid_register(offsets_rep, np.vstack(tool_pts))
        inc_t = transform(R_t, t_t)
        tool_corr = tool_corr @ inc_t
        current = model.replace(
            base_transform=base_corr @ model.base_transform,
            tool_transform=model.tool_transform @ tool_corr,
        )

        step = (
            np.max(np.abs(inc_b - np.eye(4))) + np.max(np.abs(inc_t - np.eye(4)))
        )
        if step < tol:
            break
    return base_corr, tool_corr, current


@dataclasses.dataclass
class TwoStepResult:
    """Everything the compensation pipeline needs after identification."""

    base_correction: np.ndarray
    tool_correction: np.ndarray
    compliances: ExtendedCompliances
    joint2: Joint2Regression
    calibrated_model: object
    calibrated_comp: object
    geometry: object = None


def run_two_step_identification(
    dataset, geometry, model, serial_only=False, cosine_sign=1.0,
    grouping_tol=Q2_GROUP_TOL,
):
    """Base/tool registration, compliance solve and compensator regression.

    geometry is a GeometryFitResult or an (L, a_x, a_y) triple; it is
    ignored in serial_only mode (constant k2, no compensator model).
    """
    base_corr, tool_corr, corrected = register_base_tool(dataset, model)
    compliances = identify_extended_compliances(
        dataset, corrected, grouping_tol=grouping_tol, serial_only=serial_only
    )

    new_k = corrected.nominal_compliances.copy()
    for j in range(model.n_joints):
        name = f"k{j + 1}"
        if name in compliances.k_fixed:
            new_k[j] = compliances.k_fixed[name]
    joint2 = None
    comp = None
    if serial_only:
        if "k2" in compliances.k_fixed and model.n_joints > COMP_JOINT:
            new_k[COMP_JOINT] = compliances.k_fixed["k2"]
    elif model.n_joints > COMP_JOINT:
        joint2 = regress_joint2_parameters(
            compliances.k2_groups, geometry, cosine_sign=cosine_sign
        )
        L, a_x, a_y = _geometry_triple(geometry)
        comp = CompensatorModel(
            L=L, a_x=a_x, a_y=a_y,
            K_c=joint2.K_c,
            s_0=joint2.s_0 if joint2.s_0 is not None else 1.0,
            K_theta2_0=joint2.K_theta2_0,
            cosine_sign=cosine_sign,
        )
        new_k[COMP_JOINT] = 1.0 / joint2.K_theta2_0
    calibrated = corrected.replace(nominal_compliances=new_k)
    return TwoStepResult(
        base_correction=base_corr,
        tool_correction=tool_corr,
        compliances=compliances,
        joint2=joint2,
        calibrated_model=calibrated,
        calibrated_comp=comp,
        geometry=geometry,
    )
