"""Report assembly, emission and re-parsing.

Reports are sectioned key/value documents mirroring the parameter tables
of the calibration workflow: geometry (value + CI rows), compliances in
urad/Nm, the joint-2 stiffness regression, base/tool corrections, plan
criterion and accuracy statistics. parse_report(emit_report(x)) returns x
exactly (floats are written with repr).
"""

import os

import numpy as np

from . import textdoc
from .errors import DataFormatError, MissingInputError
from .se3 import transform
from .stiffness import COMP_JOINT, CompensatorModel
from .units import from_si

SCHEMA_VERSION = 1

_SECTION_ORDER = (
    "meta",
    "geometry",
    "base_tool",
    "compliances",
    "joint2",
    "plan",
    "accuracy",
    "accuracy_measured_anchor",
)


def geometry_section(fit):
    """Mirror of the geometry results table: value row plus CI row, mm."""
    return {
        "L_mm": from_si(fit.L, "mm"),
        "a_x_mm": from_si(fit.a_x, "mm"),
        "a_y_mm": from_si(fit.a_y, "mm"),
        "ci_L_mm": from_si(fit.ci_half_widths["L"], "mm"),
        "ci_a_x_mm": from_si(fit.ci_half_widths["a_x"], "mm"),
        "ci_a_y_mm": from_si(fit.ci_half_widths["a_y"], "mm"),
        "residual_rms_mm": from_si(fit.residual_rms, "mm"),
        "plane_normal": [float(v) for v in fit.plane_normal],
    }


def compliances_section(compliances):
    """Identified compliance table in urad/Nm with 3-sigma half widths."""
    sec = {}
    sigmas = np.sqrt(np.diag(compliances.covariance))
    values = compliances.full_vector()
    for name, value, sigma in zip(compliances.parameter_names, values, sigmas):
        key = name.replace("[", "_").replace("]", "")
        sec[f"{key}_urad_per_Nm"] = from_si(value, "urad/Nm")
        sec[f"ci_{key}_urad_per_Nm"] = from_si(3.0 * sigma, "urad/Nm")
    for i, (q2, _) in enumerate(compliances.k2_groups):
        if not np.isnan(q2):
            sec[f"q2_g{i + 1}_deg"] = from_si(q2, "deg")
    sec["condition_number"] = float(compliances.condition_number)
    sec["sigma_hat_mm"] = from_si(compliances.sigma_hat, "mm")
    sec["serial_only"] = int(compliances.serial_only)
    return sec


def joint2_section(joint2):
    sigmas = np.sqrt(np.diag(joint2.covariance))
    return {
        "K_theta2_0_Nm_per_rad": float(joint2.K_theta2_0),
        "K_c_N_per_m": float(joint2.K_c),
        "s_0_mm": from_si(joint2.s_0, "mm") if joint2.s_0 is not None else "n/a",
        "ci_K_theta2_0_Nm_per_rad": float(3.0 * sigmas[0]),
        "ci_K_c_N_per_m": float(3.0 * sigmas[1]),
        "residual_rms_Nm_per_rad": float(joint2.residual_rms),
    }


def _transform_entries(prefix, T):
    return {
        f"{prefix}_rotation": [float(v) for v in np.asarray(T)[:3, :3].reshape(-1)],
        f"{prefix}_xyz_mm": [from_si(float(v), "mm") for v in np.asarray(T)[:3, 3]],
    }


def base_tool_section(base_correction, tool_correction):
    sec = {}
    sec.update(_transform_entries("base", base_correction))
    sec.update(_transform_entries("tool", tool_correction))
    return sec


def plan_section(plan):
    gids, gvals = plan.grouping()
    return {
        "m": int(plan.m),
        "criterion_m2": float(plan.criterion) if plan.criterion is not None else "n/a",
        "n_q2_groups": int(gvals.size),
    }


def accuracy_section(rep):
    return {
        "n_configurations": int(len(rep.residuals_before)),
        "max_before_mm": from_si(rep.max_before, "mm"),
        "rms_before_mm": from_si(rep.rms_before, "mm"),
        "max_after_mm": from_si(rep.max_after, "mm"),
        "rms_after_mm": from_si(rep.rms_after, "mm"),
        "improvement_factor": float(rep.improvement_factor),
        "compensated_fraction_percent": float(rep.compensated_fraction),
        "rotation_deflection_rms_rad": float(rep.rotation_deflection_rms),
    }


def emit_report(results, path):
    """Write a report (dict of section dicts). Requires >= 1 section."""
    content = {k: v for k, v in results.items() if v}
    if not content:
        raise MissingInputError("no result sections to report")
    ordered = {"meta": {"tool": "elastocal", "schema": SCHEMA_VERSION}}
    ordered["meta"].update(content.get("meta", {}))
    for name in _SECTION_ORDER:
        if name != "meta" and name in content:
            ordered[name] = content[name]
    for name in content:
        if name not in ordered:
            ordered[name] = content[name]
    textdoc.dump(textdoc.from_dict(ordered), path)
    return path


def parse_report(path):
    doc = textdoc.load(path)
    out = textdoc.to_dict(doc)
    meta = out.get("meta")
    if meta is None or meta.get("tool") != "elastocal":
        raise DataFormatError(f"{path}: not an elastocal report")
    return out


def update_report(path, new_sections):
    """Merge sections into an existing report file (or create it)."""
    results = {}
    if os.path.exists(path):
        results = parse_report(path)
    results.update(new_sections)
    return emit_report(results, path)


def _transform_from_entries(sec, prefix):
    rot = sec.get(f"{prefix}_rotation")
    xyz = sec.get(f"{prefix}_xyz_mm")
    if rot is None or xyz is None:
        return np.eye(4)
    R = np.array(rot, dtype=float).reshape(3, 3)
    t = np.array(xyz, dtype=float) * 1e-3
    return transform(R, t)


def models_from_report(report, nominal_model, cosine_sign=1.0):
    """Rebuild the calibrated (model, comp) pair from report sections.

    Base/tool corrections and identified compliances are applied on top of
    the nominal model. The compensator comes from the geometry plus joint2
    sections; a serial-only report yields comp = None with constant k2.
    """
    model = nominal_model
    if "base_tool" in report:
        sec = report["base_tool"]
        base_corr = _transform_from_entries(sec, "base")
        tool_corr = _transform_from_entries(sec, "tool")
        model = model.replace(
            base_transform=base_corr @ model.base_transform,
            tool_transform=model.tool_transform @ tool_corr,
        )

    comp = None
    serial_only = False
    if "compliances" in report:
        sec = report["compliances"]
        serial_only = bool(sec.get("serial_only", 0))
        new_k = model.nominal_compliances.copy()
        for j in range(model.n_joints):
            key = f"k{j + 1}_urad_per_Nm"
            if key in sec:
                new_k[j] = float(sec[key]) * 1e-6
        model = model.replace(nominal_compliances=new_k)

    if not serial_only and "geometry" in report and "joint2" in report:
        geo = report["geometry"]
        j2 = report["joint2"]
        s0 = j2["s_0_mm"]
        comp = CompensatorModel(
            L=float(geo["L_mm"]) * 1e-3,
            a_x=float(geo["a_x_mm"]) * 1e-3,
            a_y=float(geo["a_y_mm"]) * 1e-3,
            K_c=float(j2["K_c_N_per_m"]),
            s_0=float(s0) * 1e-3 if s0 != "n/a" else 1.0,
            K_theta2_0=float(j2["K_theta2_0_Nm_per_rad"]),
            cosine_sign=cosine_sign,
        )
        new_k = model.nominal_compliances.copy()
        if model.n_joints > COMP_JOINT:
            new_k[COMP_JOINT] = 1.0 / comp.K_theta2_0
        model = model.replace(nominal_compliances=new_k)
    return model, comp
