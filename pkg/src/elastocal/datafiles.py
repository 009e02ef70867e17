"""Measurement, trace, plan and manifest file formats.

Measurement datasets are delimited tables (CSV with a fixed header); all
other files are sectioned key/value documents. Every writer is atomic and
timestamp-free so artifact bytes depend only on the data.
"""

import csv
import io
import os

import numpy as np

from . import textdoc
from .design import ExperimentPlan, PlanEntry, TestPose
from .errors import DataFormatError
from .geometry_fit import MarkerTrace, ROLE_LINK, ROLE_PIVOT
from .identification import LoadedMeasurement

PHASES = ("unloaded", "loaded")


def _measurement_header(n_joints):
    cols = ["config_id"]
    cols += [f"q{j + 1}_rad" for j in range(n_joints)]
    cols += ["fx_N", "fy_N", "fz_N", "tx_Nm", "ty_Nm", "tz_Nm"]
    cols += ["marker_id", "phase", "x_m", "y_m", "z_m", "repetition"]
    return cols


def write_measurements(path, dataset):
    """Write LoadedMeasurements as one row per (config, marker, phase, rep)."""
    if not dataset:
        raise DataFormatError("refusing to write an empty dataset")
    n_joints = dataset[0].q.size
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_measurement_header(n_joints))
    for meas in dataset:
        base = [meas.config_id] + [repr(float(v)) for v in meas.q]
        base += [repr(float(v)) for v in meas.wrench]
        for phase, markers in (
            ("unloaded", meas.markers_unloaded),
            ("loaded", meas.markers_loaded),
        ):
            for mid, xyz in enumerate(markers):
                writer.writerow(
                    base
                    + [f"m{mid}", phase]
                    + [repr(float(v)) for v in xyz]
                    + [meas.repetition_id]
                )
    textdoc.atomic_write_text(path, buf.getvalue())


def read_measurements(path):
    """Parse a measurement table back into LoadedMeasurements."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: empty measurement file")
    header = rows[0]
    joint_cols = [c for c in header if c.startswith("q") and c.endswith("_rad")]
    n_joints = len(joint_cols)
    expected = _measurement_header(n_joints)
    if header != expected:
        raise DataFormatError(f"{path}: unexpected header {header}")

    records = {}
    order = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(expected):
            raise DataFormatError(f"{path}:{lineno}: wrong column count")
        config_id = int(row[0])
        q = np.array([float(v) for v in row[1 : 1 + n_joints]])
        w = np.array([float(v) for v in row[1 + n_joints : 7 + n_joints]])
        marker_id = row[7 + n_joints]
        phase = row[8 + n_joints]
        if phase not in PHASES:
            raise DataFormatError(f"{path}:{lineno}: unknown phase {phase!r}")
        xyz = [float(v) for v in row[9 + n_joints : 12 + n_joints]]
        rep = int(row[12 + n_joints])
        if not marker_id.startswith("m"):
            raise DataFormatError(f"{path}:{lineno}: bad marker id {marker_id!r}")
        midx = int(marker_id[1:])
        key = (config_id, rep)
        if key not in records:
            records[key] = {"q": q, "w": w, "unloaded": {}, "loaded": {}}
            order.append(key)
        records[key][phase][midx] = xyz

    dataset = []
    for key in order:
        rec = records[key]
        n_markers = len(rec["unloaded"])
        if set(rec["unloaded"]) != set(range(n_markers)) or set(rec["loaded"]) != set(
            range(n_markers)
        ):
            raise DataFormatError(f"{path}: incomplete marker set for config {key}")
        unloaded = np.array([rec["unloaded"][i] for i in range(n_markers)])
        loaded = np.array([rec["loaded"][i] for i in range(n_markers)])
        dataset.append(
            LoadedMeasurement(
                config_id=key[0],
                q=rec["q"],
                wrench=rec["w"],
                markers_unloaded=unloaded,
                markers_loaded=loaded,
                repetition_id=key[1],
            )
        )
    return dataset


def write_traces(path, traces):
    doc = textdoc.Document()
    for trace in traces:
        sec = doc.add_section(f"trace {trace.marker_id}")
        sec.add("role", trace.role)
        if trace.radius is not None:
            sec.add("radius", float(trace.radius))
        if trace.phase is not None:
            sec.add("phase", float(trace.phase))
        for q2, pos in zip(trace.q2, trace.positions):
            sec.add("sample", [float(q2)] + [float(v) for v in pos])
    textdoc.dump(doc, path)


def read_traces(path):
    doc = textdoc.load(path)
    traces = []
    for sec in doc.sections_named("trace"):
        parts = sec.name.split(None, 1)
        if len(parts) != 2:
            raise DataFormatError(f"{path}: trace section needs an id: [{sec.name}]")
        role = sec.get("role", ROLE_PIVOT)
        if role not in (ROLE_LINK, ROLE_PIVOT):
            raise DataFormatError(f"{path}: unknown trace role {role!r}")
        samples = sec.get_all("sample")
        q2 = []
        pos = []
        for s in samples:
            if not isinstance(s, list) or len(s) != 4:
                raise DataFormatError(f"{path}: sample must be 'q2 x y z'")
            q2.append(float(s[0]))
            pos.append([float(v) for v in s[1:]])
        traces.append(
            MarkerTrace(
                marker_id=parts[1],
                q2=np.array(q2),
                positions=np.array(pos),
                radius=float(sec.get("radius")) if "radius" in sec else None,
                phase=float(sec.get("phase")) if "phase" in sec else None,
                role=role,
            )
        )
    if not traces:
        raise DataFormatError(f"{path}: no trace sections found")
    return traces


def write_plan(path, plan, test=None):
    doc = textdoc.Document()
    sec = doc.add_section("plan")
    sec.add("m", plan.m)
    for entry in plan.entries:
        sec.add("entry", list(entry.q) + list(entry.wrench))
    if plan.criterion is not None:
        crit = doc.add_section("criterion")
        crit.add("value_m2", float(plan.criterion))
    if test is not None:
        tp = doc.add_section("test_pose")
        tp.add("q", list(test.q))
        tp.add("wrench", list(test.wrench))
    textdoc.dump(doc, path)


def read_plan(path):
    doc = textdoc.load(path)
    sec = doc.section("plan")
    entries = []
    for raw in sec.get_all("entry"):
        vals = [float(v) for v in raw]
        if len(vals) < 7:
            raise DataFormatError(f"{path}: plan entry needs q(n) + wrench(6)")
        entries.append(PlanEntry(np.array(vals[:-6]), np.array(vals[-6:])))
    if not entries:
        raise DataFormatError(f"{path}: plan has no entries")
    criterion = None
    if "criterion" in doc:
        criterion = float(doc.section("criterion").get("value_m2"))
    plan = ExperimentPlan(entries, criterion=criterion)
    test = None
    if "test_pose" in doc:
        tp = doc.section("test_pose")
        test = TestPose(
            np.array([float(v) for v in tp.get("q")]),
            np.array([float(v) for v in tp.get("wrench")]),
        )
    return plan, test


def write_manifest(path, manifest):
    doc = textdoc.Document()
    sec = doc.add_section("manifest")
    for key, value in manifest.items():
        sec.add(key, value)
    textdoc.dump(doc, path)


def read_manifest(path):
    doc = textdoc.load(path)
    return dict(doc.section("manifest").items)


def file_digest(path):
    """Repeatability helper: SHA-256 of a file's bytes."""
    import hashlib

    h = hashlib.sha256()
    with open(os.fspath(path), "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
