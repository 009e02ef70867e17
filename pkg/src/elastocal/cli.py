"""Command-line interface.

Verbs map 1:1 onto the module pipelines:

    simulate               synthetic traces + calibration/validation data
    identify-geometry      compensator geometry from marker traces
    identify-elastostatics two-step compliance identification
    plan                   optimal measurement plan for a test pose
    compensate             corrected targets for (q, wrench) entries
    evaluate               accuracy statistics on a validation dataset

Artifacts are written atomically and depend only on (config, seed,
inputs). ELASTOCAL_REPORT_DIR overrides the report output directory.
"""

import argparse
import os
import sys

import numpy as np

from . import datafiles, report as report_mod, textdoc
from .compensation import compensated_target, evaluate_accuracy
from .config import parse_project
from .design import ExperimentPlan, SearchConfig, build_candidate_grid, optimize_plan
from .errors import ElastocalError, MissingInputError
from .geometry_fit import (
    ROLE_LINK,
    identify_compensator_geometry,
    marker_balance_residual,
)
from .identification import run_two_step_identification
from .simulator import (
    GroundTruth,
    NoiseSpec,
    generate_calibration_dataset,
    simulate_compensator_markers,
)

VERBS = (
    "simulate",
    "identify-geometry",
    "identify-elastostatics",
    "plan",
    "compensate",
    "evaluate",
)

_EXIT_CODES = {
    "usage": 2,
    "config": 3,
    "data": 4,
    "numerical": 5,
    "error": 1,
}

DEFAULT_Q2_SWEEP = np.deg2rad([0.0, -30.0, -60.0, -90.0, -120.0, -140.0])


def _report_path(out_dir):
    report_dir = os.environ.get("ELASTOCAL_REPORT_DIR") or out_dir
    os.makedirs(report_dir, exist_ok=True)
    return os.path.join(report_dir, "report.txt")


def _require(inputs, key, why):
    path = inputs.get(key)
    if not path:
        raise MissingInputError(f"{why} (missing --{key})")
    if not os.path.exists(path):
        raise MissingInputError(f"--{key} file not found: {path}")
    return path


def _ground_truth(config):
    if config.comp is None:
        raise MissingInputError(
            "simulate needs a [compensator] section as ground truth"
        )
    kwargs = {}
    if config.simulate.base_perturbation is not None:
        kwargs["base_perturbation"] = config.simulate.base_perturbation
    if config.simulate.tool_perturbation is not None:
        kwargs["tool_perturbation"] = config.simulate.tool_perturbation
    return GroundTruth(model=config.model, comp=config.comp, **kwargs)


def _default_plan(config, stream, q2_values, magnitude, n):
    from elastocal.kinematics import fk_jacobians

    oversample = 3 * n if q2_values is not None else n
    entries = build_candidate_grid(
        config.model,
        oversample,
        q2_values=q2_values,
        force_magnitudes=(magnitude,) if np.isscalar(magnitude) else tuple(magnitude),
        seed=config.seed * 1000 + stream,
    )
    if q2_values is not None and config.model.n_joints > 1:
        # round-robin the q2 values so every group is represented, keeping
        # only candidates that stay well-conditioned after the override
        kept = []
        for entry in entries:
            q = entry.q.copy()
            q[1] = q2_values[len(kept) % len(q2_values)]
            _, _, jac = fk_jacobians(config.model, q)
            sv = np.linalg.svd(jac[0], compute_uv=False)
            if sv[-1] >= 1e-6 * sv[0]:
                kept.append(entry._replace(q=q))
            if len(kept) == n:
                break
        if len(kept) < n:
            raise MissingInputError("could not build a feasible default plan")
        entries = kept
    return ExperimentPlan(entries)


def run_simulate(config, inputs, out_dir):
    truth = _ground_truth(config)
    artifacts = {}

    q2_sweep = config.simulate.q2_sweep
    if q2_sweep is None:
        q2_sweep = DEFAULT_Q2_SWEEP
    traces = simulate_compensator_markers(
        truth, q2_sweep, markers=config.simulate.geometry_markers, noise=config.noise
    )
    traces_path = os.path.join(out_dir, "traces.txt")
    datafiles.write_traces(traces_path, traces)
    artifacts["traces"] = traces_path

    if inputs.get("plan"):
        plan, _ = datafiles.read_plan(_require(inputs, "plan", "plan file"))
    else:
        plan = _default_plan(
            config, 1,
            config.plan.q2_values,
            config.plan.force_magnitudes,
            config.plan.m,
        )
        plan_path = os.path.join(out_dir, "plan_used.txt")
        datafiles.write_plan(plan_path, plan)
        artifacts["plan_used"] = plan_path

    dataset, manifest = generate_calibration_dataset(
        plan, truth, noise=config.noise,
        repetitions=config.simulate.repetitions,
        mode=config.simulate.generation_mode,
    )
    dataset_path = os.path.join(out_dir, "dataset.csv")
    datafiles.write_measurements(dataset_path, dataset)
    artifacts["dataset"] = dataset_path

    val_plan = _default_plan(
        config, 2,
        config.validation.q2_values,
        config.validation.force_magnitude,
        config.validation.n,
    )
    validation, _ = generate_calibration_dataset(
        val_plan, truth, noise=config.noise,
        repetitions=config.simulate.repetitions,
        mode=config.simulate.generation_mode,
        start_config_id=1000,
    )
    validation_path = os.path.join(out_dir, "validation.csv")
    datafiles.write_measurements(validation_path, validation)
    artifacts["validation"] = validation_path

    manifest_path = os.path.join(out_dir, "manifest.txt")
    datafiles.write_manifest(manifest_path, manifest)
    artifacts["manifest"] = manifest_path
    print(
        f"simulated {manifest['n_configurations']} configurations "
        f"({manifest['n_q2_groups']} q2 groups), {config.validation.n} validation, "
        f"{len(traces)} traces"
    )
    return artifacts


def run_identify_geometry(config, inputs, out_dir):
    traces = datafiles.read_traces(_require(inputs, "traces", "marker trace file"))
    link = [t for t in traces if t.role == ROLE_LINK]
    pivot = [t for t in traces if t.role != ROLE_LINK]
    if len(link) != 1 or not pivot:
        raise MissingInputError(
            "trace file must contain one link_attachment trace and >= 1 pivot traces"
        )
    fit = identify_compensator_geometry(link[0], pivot)
    if all(t.radius is not None and t.phase is not None for t in pivot):
        r_cos, r_sin = marker_balance_residual(pivot)
        balanced = abs(r_cos) <= 1e-6 and abs(r_sin) <= 1e-6
        print(
            f"marker balance residual: ({r_cos:.3e}, {r_sin:.3e}) m"
            + ("" if balanced else "  [warning: marker placement not balanced]")
        )
    path = report_mod.update_report(
        inputs.get("report") or _report_path(out_dir),
        {"geometry": report_mod.geometry_section(fit)},
    )
    print(
        f"geometry: L = {fit.L * 1e3:.3f} mm, a_x = {fit.a_x * 1e3:.3f} mm, "
        f"a_y = {fit.a_y * 1e3:.3f} mm"
    )
    return {"report": path}


def _geometry_from_report_or_config(config, report_data):
    if report_data and "geometry" in report_data:
        geo = report_data["geometry"]
        return (
            float(geo["L_mm"]) * 1e-3,
            float(geo["a_x_mm"]) * 1e-3,
            float(geo["a_y_mm"]) * 1e-3,
        )
    if config.comp is not None:
        return (config.comp.L, config.comp.a_x, config.comp.a_y)
    raise MissingInputError(
        "no compensator geometry: run identify-geometry or configure [compensator]"
    )


def run_identify_elastostatics(config, inputs, out_dir, serial_only=False):
    dataset = datafiles.read_measurements(
        _require(inputs, "dataset", "calibration dataset")
    )
    report_path = inputs.get("report") or _report_path(out_dir)
    report_data = (
        report_mod.parse_report(report_path) if os.path.exists(report_path) else {}
    )
    cosine_sign = config.comp.cosine_sign if config.comp is not None else 1.0
    geometry = None if serial_only else _geometry_from_report_or_config(config, report_data)
    result = run_two_step_identification(
        dataset, geometry, config.model,
        serial_only=serial_only, cosine_sign=cosine_sign,
    )
    sections = {
        "base_tool": report_mod.base_tool_section(
            result.base_correction, result.tool_correction
        ),
        "compliances": report_mod.compliances_section(result.compliances),
    }
    if result.joint2 is not None:
        sections["joint2"] = report_mod.joint2_section(result.joint2)
    path = report_mod.update_report(report_path, sections)
    ks = ", ".join(
        f"{n} = {v * 1e6:.3f}"
        for n, v in sorted(result.compliances.k_fixed.items())
    )
    print(f"identified compliances [urad/Nm]: {ks}")
    if result.joint2 is not None:
        s0 = result.joint2.s_0
        print(
            f"joint2: K0 = {result.joint2.K_theta2_0:.6g} Nm/rad, "
            f"Kc = {result.joint2.K_c:.6g} N/m, "
            f"s0 = {'n/a' if s0 is None else f'{s0 * 1e3:.2f} mm'}"
        )
    return {"report": path}


def run_plan(config, inputs, out_dir):
    if config.test_pose is None:
        raise MissingInputError("plan needs a [test_pose] section in the project")
    grid = build_candidate_grid(
        config.model,
        config.plan.grid_size,
        q2_values=config.plan.q2_values,
        force_magnitudes=config.plan.force_magnitudes,
        seed=config.seed,
    )
    plan = optimize_plan(
        grid, config.plan.m, config.test_pose, config.model, config.comp,
        SearchConfig(restarts=config.plan.restarts, seed=config.seed),
    )
    plan_path = os.path.join(out_dir, "plan.txt")
    datafiles.write_plan(plan_path, plan, test=config.test_pose)
    report_mod.update_report(
        inputs.get("report") or _report_path(out_dir),
        {"plan": report_mod.plan_section(plan)},
    )
    print(f"optimized plan: m = {plan.m}, criterion = {plan.criterion:.6g} m^2")
    return {"plan": plan_path}


def _calibrated_models(config, inputs):
    report_file = inputs.get("report")
    if report_file:
        if not os.path.exists(report_file):
            raise MissingInputError(f"--report file not found: {report_file}")
        data = report_mod.parse_report(report_file)
        cosine_sign = config.comp.cosine_sign if config.comp is not None else 1.0
        return report_mod.models_from_report(data, config.model, cosine_sign)
    return config.model, config.comp


def run_compensate(config, inputs, out_dir):
    targets_plan, _ = datafiles.read_plan(
        _require(inputs, "targets", "targets file (plan format)")
    )
    model, comp = _calibrated_models(config, inputs)
    doc = textdoc.Document()
    sec = doc.add_section("compensated_targets")
    clipped_count = 0
    for entry in targets_plan.entries:
        result = compensated_target(model, comp, entry.q, entry.wrench)
        clipped_count += result.clipped
        sec.add(
            "target",
            list(result.q_corrected)
            + list(result.position)
            + [int(result.clipped)],
        )
    out_path = os.path.join(out_dir, "targets_corrected.txt")
    textdoc.dump(doc, out_path)
    print(
        f"compensated {targets_plan.m} targets"
        + (f" ({clipped_count} clipped to trust radius)" if clipped_count else "")
    )
    return {"targets_corrected": out_path}


def run_evaluate(config, inputs, out_dir):
    validation = datafiles.read_measurements(
        _require(inputs, "validation", "evaluate requires a validation dataset")
    )
    ident = None
    if inputs.get("dataset"):
        ident = datafiles.read_measurements(inputs["dataset"])
    model, comp = _calibrated_models(config, inputs)
    rep_model = evaluate_accuracy(
        validation, model, comp, identification_dataset=ident, anchor="model"
    )
    rep_measured = evaluate_accuracy(
        validation, model, comp, identification_dataset=ident, anchor="measured"
    )
    path = report_mod.update_report(
        inputs.get("report") or _report_path(out_dir),
        {
            "accuracy": report_mod.accuracy_section(rep_model),
            "accuracy_measured_anchor": report_mod.accuracy_section(rep_measured),
        },
    )
    print(
        f"accuracy: before max/rms = {rep_model.max_before * 1e3:.2f}/"
        f"{rep_model.rms_before * 1e3:.2f} mm, after = {rep_model.max_after * 1e3:.3f}/"
        f"{rep_model.rms_after * 1e3:.3f} mm, improvement = "
        f"{rep_model.improvement_factor:.1f}, compensated = "
        f"{rep_model.compensated_fraction:.2f}%"
    )
    return {"report": path}


def run_command(verb, config, inputs, out_dir, serial_only=False):
    """Dispatch a verb; returns a dict of written artifact paths."""
    os.makedirs(out_dir, exist_ok=True)
    if verb == "simulate":
        return run_simulate(config, inputs, out_dir)
    if verb == "identify-geometry":
        return run_identify_geometry(config, inputs, out_dir)
    if verb == "identify-elastostatics":
        return run_identify_elastostatics(config, inputs, out_dir, serial_only)
    if verb == "plan":
        return run_plan(config, inputs, out_dir)
    if verb == "compensate":
        return run_compensate(config, inputs, out_dir)
    if verb == "evaluate":
        return run_evaluate(config, inputs, out_dir)
    raise MissingInputError(f"unknown verb {verb!r}; expected one of {VERBS}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="elastocal",
        description="Elastostatic calibration toolkit for compensator-equipped 6R robots",
    )
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("--config", required=True, help="project file")
    parser.add_argument("--out-dir", default=".", help="artifact output directory")
    parser.add_argument("--plan", help="measurement plan file")
    parser.add_argument("--traces", help="marker trace file")
    parser.add_argument("--dataset", help="calibration measurement file")
    parser.add_argument("--validation", help="validation measurement file")
    parser.add_argument("--report", help="identified-parameter report to use")
    parser.add_argument("--targets", help="targets file for compensate")
    parser.add_argument(
        "--serial-only", action="store_true",
        help="identify with a constant joint-2 compliance (no compensator model)",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    inputs = {
        "plan": args.plan,
        "traces": args.traces,
        "dataset": args.dataset,
        "validation": args.validation,
        "report": args.report,
        "targets": args.targets,
    }
    try:
        config = parse_project(args.config)
        run_command(args.verb, config, inputs, args.out_dir, args.serial_only)
    except ElastocalError as exc:
        print(f"error: category={exc.category} message={exc}", file=sys.stderr)
        return _EXIT_CODES.get(exc.category, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
