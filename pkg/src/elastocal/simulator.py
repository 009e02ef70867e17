"""Synthetic ground-truth data generation standing in for the laser tracker.

Two experiment families: compensator marker traces (pure planar geometry
around the joint-2 axis) and loaded/unloaded robot marker measurements.
All randomness flows from NoiseSpec.seed through fixed per-stage,
per-entry substreams, so every dataset is bit-reproducible.
"""

import dataclasses
import hashlib

import numpy as np

from .errors import DegenerateDataError
from .geometry_fit import MarkerTrace, ROLE_LINK, ROLE_PIVOT
from .identification import LoadedMeasurement
from .kinematics import fk_jacobians
from .stiffness import joint_deflections

# substream tags
_STAGE_TRACES = 1
_STAGE_DATASET = 2

DEFAULT_PIVOT_MARKERS = (
    (0.15, np.deg2rad(40.0)),
    (0.10, np.deg2rad(130.0)),
    (0.15, np.deg2rad(220.0)),
    (0.10, np.deg2rad(310.0)),
)


@dataclasses.dataclass(frozen=True)
class NoiseSpec:
    """Isotropic per-axis Gaussian position noise and the master seed."""

    sigma_position: float = 3e-5
    seed: int = 0

    def __post_init__(self):
        if self.sigma_position < 0:
            raise DegenerateDataError("noise sigma must be >= 0")

    def rng(self, *stream):
        return np.random.default_rng(
            np.random.SeedSequence([int(self.seed) & 0xFFFFFFFF, *stream])
        )


@dataclasses.dataclass(frozen=True)
class GroundTruth:
    """True robot and compensator, plus hidden base/tool perturbations."""

    model: object
    comp: object = None
    base_perturbation: np.ndarray = dataclasses.field(default_factory=lambda: np.eye(4))
    tool_perturbation: np.ndarray = dataclasses.field(default_factory=lambda: np.eye(4))

    @property
    def true_model(self):
        return self.model.replace(
            base_transform=np.asarray(self.base_perturbation, float)
            @ self.model.base_transform,
            tool_transform=self.model.tool_transform
            @ np.asarray(self.tool_perturbation, float),
        )

    def digest(self):
        """Stable hash of all ground-truth numbers, for manifests."""
        h = hashlib.sha256()
        for arr in (
            self.model.link_rows,
            self.model.base_transform,
            self.model.tool_transform,
            self.model.marker_offsets,
            self.model.nominal_compliances,
            np.asarray(self.base_perturbation, float),
            np.asarray(self.tool_perturbation, float),
        ):
            h.update(np.ascontiguousarray(arr).tobytes())
        if self.comp is not None:
            comp_vals = np.array(
                [
                    self.comp.L, self.comp.a_x, self.comp.a_y,
                    self.comp.K_c, self.comp.s_0, self.comp.K_theta2_0,
                    self.comp.cosine_sign,
                ]
            )
            h.update(comp_vals.tobytes())
        return h.hexdigest()[:16]


def simulate_compensator_markers(truth, q2_set, markers=None, noise=None):
    """Marker traces of the compensator geometry experiment.

    Works in the compensator plane frame: the joint-2 axis point P2 sits
    at the origin, the plane is z = 0. The link-side marker P1 sweeps the
    circle of radius L as u(q2); pivot-side markers ride circles of radius
    R_j about the pivot p0 at phase beta_j + phi(q2), where phi(q2) is the
    angle of the pivot-to-P1 direction (the compensator body points from
    pivot to attachment).
    """
    comp = truth.comp
    if comp is None:
        raise DegenerateDataError("ground truth has no compensator")
    q2 = np.asarray(q2_set, dtype=float).reshape(-1)
    if q2.size == 0:
        raise DegenerateDataError("empty q2 set")
    if markers is None:
        markers = DEFAULT_PIVOT_MARKERS
    noise = noise or NoiseSpec(sigma_position=0.0)

    p1 = comp.L * np.column_stack([np.cos(q2), np.sin(q2), np.zeros_like(q2)])
    p0 = np.array([comp.a_x, comp.a_y, 0.0])
    phi = np.arctan2(p1[:, 1] - p0[1], p1[:, 0] - p0[0])

    traces = []
    rng = noise.rng(_STAGE_TRACES, 0)
    noisy_p1 = p1 + rng.normal(0.0, noise.sigma_position, size=p1.shape)
    traces.append(
        MarkerTrace("P1", q2, noisy_p1, radius=None, phase=None, role=ROLE_LINK)
    )
    for j, (radius, beta) in enumerate(markers):
        ang = beta + phi
        pts = p0 + radius * np.column_stack(
            [np.cos(ang), np.sin(ang), np.zeros_like(ang)]
        )
        rng = noise.rng(_STAGE_TRACES, j + 1)
        pts = pts + rng.normal(0.0, noise.sigma_position, size=pts.shape)
        traces.append(
            MarkerTrace(
                f"P0{j + 1}", q2, pts, radius=radius, phase=beta, role=ROLE_PIVOT
            )
        )
    return traces


def simulate_loaded_measurement(
    truth, q, wrench, noise=None, repetitions=3, config_id=0,
    mode="linear", include_hessian=False,
):
    """Unloaded and loaded marker measurements for one configuration.

    Unloaded markers come from the true forward kinematics at theta = 0;
    loaded markers add the true deflection. mode='linear' (default)
    displaces each marker by its Jacobian times the joint deflections,
    which keeps the data exactly consistent with the linear identification
    model; mode='nonlinear' re-evaluates the kinematics at the deflected
    joints for model-mismatch studies.
    """
    noise = noise or NoiseSpec(sigma_position=0.0)
    model = truth.true_model
    q = model.validate_q(q)
    F = np.asarray(wrench, dtype=float).reshape(6)

    _, markers, jac = fk_jacobians(model, q)
    theta = joint_deflections(model, truth.comp, q, F, include_hessian=include_hessian)
    if mode == "linear":
        loaded = markers + np.einsum("kij,j->ki", jac[1:, :3, :], theta)
    elif mode == "nonlinear":
        _, loaded, _ = fk_jacobians(model, q, theta)
    else:
        raise ValueError(f"unknown generation mode {mode!r}")

    out = []
    for rep in range(repetitions):
        rng = noise.rng(_STAGE_DATASET, int(config_id), rep)
        meas_unloaded = markers + rng.normal(0.0, noise.sigma_position, markers.shape)
        meas_loaded = loaded + rng.normal(0.0, noise.sigma_position, loaded.shape)
        out.append(
            LoadedMeasurement(
                config_id=int(config_id),
                q=q,
                wrench=F,
                markers_unloaded=meas_unloaded,
                markers_loaded=meas_loaded,
                repetition_id=rep,
            )
        )
    return out


def generate_calibration_dataset(
    plan, truth, noise=None, repetitions=3, mode="linear", include_hessian=False,
    start_config_id=0,
):
    """Simulate every plan entry; returns (measurements, manifest)."""
    entries = list(plan.entries if hasattr(plan, "entries") else plan)
    if not entries:
        raise DegenerateDataError("empty measurement plan")
    noise = noise or NoiseSpec(sigma_position=0.0)
    dataset = []
    q2_values = []
    for i, entry in enumerate(entries):
        q, F = entry
        dataset.extend(
            simulate_loaded_measurement(
                truth, q, F, noise=noise, repetitions=repetitions,
                config_id=start_config_id + i, mode=mode,
                include_hessian=include_hessian,
            )
        )
        if truth.model.n_joints > 1:
            q2_values.append(float(np.asarray(q, float)[1]))
    from .identification import group_q2

    n_groups = int(group_q2(q2_values)[1].size) if q2_values else 0
    manifest = {
        "seed": int(noise.seed),
        "sigma_position_m": float(noise.sigma_position),
        "repetitions": int(repetitions),
        "n_configurations": len(entries),
        "n_q2_groups": n_groups,
        "generation_mode": mode,
        "include_hessian": bool(include_hessian),
        "truth_digest": truth.digest(),
    }
    return dataset, manifest
