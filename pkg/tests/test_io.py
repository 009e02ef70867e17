"""Text document format, units, data files, config and report round trips."""

import math
import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from elastocal import textdoc
from elastocal.config import parse_project, parse_robot_spec, write_robot_spec
from elastocal.datafiles import (
    read_manifest,
    read_measurements,
    read_plan,
    read_traces,
    write_manifest,
    write_measurements,
    write_plan,
    write_traces,
)
from elastocal.design import TestPose
from elastocal.errors import ConfigError, DataFormatError, MissingInputError
from elastocal.kinematics import kr270_like
from elastocal.report import emit_report, models_from_report, parse_report
from elastocal.simulator import GroundTruth, NoiseSpec, generate_calibration_dataset, simulate_compensator_markers
from elastocal.units import from_si, quantity, quantity_groups, to_si


def test_textdoc_round_trip(tmp_path):
    doc = textdoc.Document()
    sec = doc.add_section("alpha")
    sec.add("count", 3)
    sec.add("value", 0.1 + 0.2)
    sec.add("vector", [1.5, -2.25, 1e-17])
    sec.add("name", "run_7")
    sec.add("name", "run_8")
    path = tmp_path / "doc.txt"
    textdoc.dump(doc, path)
    back = textdoc.load(path)
    sec2 = back.section("alpha")
    assert sec2.get("count") == 3
    assert sec2.get("value") == 0.1 + 0.2
    assert sec2.get("vector") == [1.5, -2.25, 1e-17]
    assert sec2.get_all("name") == ["run_7", "run_8"]


def test_textdoc_parse_errors():
    with pytest.raises(DataFormatError):
        textdoc.loads("key = 1\n")
    with pytest.raises(DataFormatError):
        textdoc.loads("[s]\nno equals sign\n")


def test_unit_conversions_round_trip():
    for unit in ("m", "mm", "deg", "rad", "urad/Nm", "N", "Nm/rad", "N/m"):
        x = 0.6234567
        assert abs(from_si(to_si(x, unit), unit) - x) <= 1e-15 * abs(x)


def test_compliance_unit_example():
    # '0.623 urad/Nm' stores as 6.23e-7 rad/(N*m)
    assert quantity([0.623, "urad/Nm"], "urad/Nm") == pytest.approx(6.23e-7, rel=1e-15)


def test_quantity_forms():
    assert quantity(5, "mm") == pytest.approx(5e-3)
    assert quantity([30.0, "deg"], "rad") == pytest.approx(math.pi / 6)
    assert quantity([1.0, 2.0, 3.0, "mm"], "mm") == pytest.approx([1e-3, 2e-3, 3e-3])
    with pytest.raises(ConfigError):
        quantity([1.0, "lightyear"], "m")
    assert quantity_groups([350.0, "mm", -90.0, "deg"]) == pytest.approx(
        [0.35, -math.pi / 2]
    )
    with pytest.raises(ConfigError):
        quantity_groups([350.0, "mm", -90.0])


def test_measurement_file_round_trip(tmp_path, kr_model, comp, ident_plan):
    truth = GroundTruth(model=kr_model, comp=comp)
    dataset, _ = generate_calibration_dataset(ident_plan, truth, NoiseSpec(3e-5, 3))
    path = tmp_path / "dataset.csv"
    write_measurements(path, dataset)
    back = read_measurements(path)
    assert len(back) == len(dataset)
    for a, b in zip(dataset, back):
        assert a.config_id == b.config_id and a.repetition_id == b.repetition_id
        assert np.array_equal(a.q, b.q)
        assert np.array_equal(a.wrench, b.wrench)
        assert np.array_equal(a.markers_unloaded, b.markers_unloaded)
        assert np.array_equal(a.markers_loaded, b.markers_loaded)


def test_trace_file_round_trip(tmp_path, kr_model, comp):
    truth = GroundTruth(model=kr_model, comp=comp)
    traces = simulate_compensator_markers(
        truth, np.deg2rad([0, -40, -80, -120]), noise=NoiseSpec(1e-5, 4)
    )
    path = tmp_path / "traces.txt"
    write_traces(path, traces)
    back = read_traces(path)
    assert [t.marker_id for t in back] == [t.marker_id for t in traces]
    for a, b in zip(traces, back):
        assert a.role == b.role
        assert np.array_equal(a.q2, b.q2)
        assert np.array_equal(a.positions, b.positions)
        assert (a.radius is None) == (b.radius is None)
        if a.radius is not None:
            assert a.radius == b.radius and a.phase == b.phase


def test_plan_file_round_trip(tmp_path, ident_plan):
    test = TestPose(np.deg2rad([0, -60, 30, 10, -40, 20]), [500.0, 300.0, -1500.0, 0, 0, 0])
    ident_plan.criterion = 1.25
    path = tmp_path / "plan.txt"
    write_plan(path, ident_plan, test=test)
    plan, test_back = read_plan(path)
    assert plan.m == ident_plan.m
    assert plan.criterion == 1.25
    for a, b in zip(ident_plan.entries, plan.entries):
        assert np.array_equal(a.q, b.q) and np.array_equal(a.wrench, b.wrench)
    assert np.array_equal(test_back.q, test.q)
    assert np.array_equal(test_back.wrench, test.wrench)


def test_manifest_round_trip(tmp_path):
    manifest = {"seed": 7, "sigma_position_m": 3e-5, "truth_digest": "abc123"}
    path = tmp_path / "manifest.txt"
    write_manifest(path, manifest)
    back = read_manifest(path)
    assert back == manifest


def test_robot_spec_round_trip(tmp_path, kr_model):
    path = tmp_path / "robot.cfg"
    write_robot_spec(path, kr_model)
    back = parse_robot_spec(path)
    assert_allclose(back.link_rows, kr_model.link_rows, rtol=1e-14, atol=1e-17)
    assert_allclose(back.joint_limits, kr_model.joint_limits, rtol=1e-14)
    assert_allclose(back.marker_offsets, kr_model.marker_offsets, rtol=1e-14, atol=1e-17)
    assert_allclose(
        back.nominal_compliances, kr_model.nominal_compliances, rtol=1e-14
    )
    assert_allclose(back.base_transform, kr_model.base_transform, atol=1e-15)
    assert_allclose(back.tool_transform, kr_model.tool_transform, atol=1e-15)


def test_robot_spec_rejects_negative_length(tmp_path):
    path = tmp_path / "bad_robot.cfg"
    path.write_text("[links]\nlink = -100 mm 0 deg 0 mm 0 deg\n")
    with pytest.raises(ConfigError) as exc:
        parse_robot_spec(path)
    assert "link length a" in str(exc.value)


def write_minimal_project(tmp_path, extra=""):
    write_robot_spec(tmp_path / "robot.cfg", kr270_like())
    text = (
        "[project]\nseed = 11\nrobot = robot.cfg\n\n"
        "[compensator]\nL = 184.72 mm\na_x = 685.93 mm\na_y = 123.30 mm\n"
        "K_c = 3.0e6 N/m\ns_0 = 400 mm\nK_theta2_0 = 2.0e6 Nm/rad\n" + extra
    )
    (tmp_path / "project.cfg").write_text(text)
    return tmp_path / "project.cfg"


def test_minimal_project_parses(tmp_path):
    cfg = parse_project(write_minimal_project(tmp_path))
    assert cfg.seed == 11
    assert cfg.model.n_joints == 6
    assert cfg.comp.L == pytest.approx(0.18472, rel=1e-12)
    assert cfg.comp.K_c == pytest.approx(3.0e6)
    assert cfg.noise.sigma_position == pytest.approx(3e-5)


def test_project_missing_robot(tmp_path):
    (tmp_path / "p.cfg").write_text("[project]\nseed = 1\nrobot = nowhere.cfg\n")
    with pytest.raises(ConfigError):
        parse_project(tmp_path / "p.cfg")


def test_compensator_identify_mode(tmp_path):
    write_robot_spec(tmp_path / "robot.cfg", kr270_like())
    (tmp_path / "p.cfg").write_text(
        "[project]\nseed = 1\nrobot = robot.cfg\n\n[compensator]\nmode = identify\n"
    )
    cfg = parse_project(tmp_path / "p.cfg")
    assert cfg.comp is None


def test_compensator_minus_sign_convention(tmp_path):
    cfg = parse_project(
        write_minimal_project(tmp_path, extra="cosine_sign = minus\n")
    )
    assert cfg.comp.cosine_sign == -1.0


def test_compensator_bad_mode(tmp_path):
    write_robot_spec(tmp_path / "robot.cfg", kr270_like())
    (tmp_path / "p.cfg").write_text(
        "[project]\nseed = 1\nrobot = robot.cfg\n\n[compensator]\nmode = guess\n"
    )
    with pytest.raises(ConfigError):
        parse_project(tmp_path / "p.cfg")


def test_report_round_trip(tmp_path):
    results = {
        "geometry": {
            "L_mm": 184.72,
            "a_x_mm": 685.93,
            "a_y_mm": 123.3,
            "ci_L_mm": 0.06,
            "plane_normal": [0.0, 0.0, 1.0],
        },
        "accuracy": {
            "rms_before_mm": 5.9,
            "rms_after_mm": 0.53,
            "improvement_factor": float("inf"),
        },
    }
    path = tmp_path / "report.txt"
    emit_report(results, path)
    back = parse_report(path)
    for section, content in results.items():
        assert back[section] == content
    assert back["meta"]["tool"] == "elastocal"


def test_report_requires_content(tmp_path):
    with pytest.raises(MissingInputError):
        emit_report({}, tmp_path / "empty.txt")


def test_models_from_report_round_trip(tmp_path, kr_model, comp, ident_plan):
    from elastocal.identification import run_two_step_identification
    from elastocal.report import (
        base_tool_section,
        compliances_section,
        geometry_section,
        joint2_section,
    )
    from elastocal.geometry_fit import GeometryFitResult
    from elastocal.se3 import transform_rpy

    pert = transform_rpy(0.002, -0.001, 0.001, *np.deg2rad([0.2, -0.3, 0.1]))
    truth = GroundTruth(model=kr_model, comp=comp, base_perturbation=pert)
    ds, _ = generate_calibration_dataset(ident_plan, truth, NoiseSpec(0.0, 12))
    res = run_two_step_identification(ds, (comp.L, comp.a_x, comp.a_y), kr_model)
    geo = GeometryFitResult(
        L=comp.L, p0=np.array([comp.a_x, comp.a_y, 0.0]), a_x=comp.a_x,
        a_y=comp.a_y, rotation=np.eye(3), plane_normal=np.array([0.0, 0.0, 1.0]),
        residual_rms=0.0, ci_half_widths={"L": 0.0, "a_x": 0.0, "a_y": 0.0},
    )
    path = tmp_path / "report.txt"
    emit_report(
        {
            "geometry": geometry_section(geo),
            "base_tool": base_tool_section(res.base_correction, res.tool_correction),
            "compliances": compliances_section(res.compliances),
            "joint2": joint2_section(res.joint2),
        },
        path,
    )
    model, comp_back = models_from_report(parse_report(path), kr_model)
    assert_allclose(
        model.base_transform, res.calibrated_model.base_transform, atol=1e-12
    )
    assert_allclose(
        model.nominal_compliances, res.calibrated_model.nominal_compliances,
        rtol=1e-9,
    )
    assert comp_back.K_c == pytest.approx(comp.K_c, rel=1e-6)
    assert comp_back.s_0 == pytest.approx(comp.s_0, rel=1e-6)
    assert comp_back.K_theta2_0 == pytest.approx(comp.K_theta2_0, rel=1e-6)


def test_atomic_write_leaves_no_temp(tmp_path):
    path = tmp_path / "out.txt"
    textdoc.atomic_write_text(path, "hello\n")
    assert path.read_text() == "hello\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
