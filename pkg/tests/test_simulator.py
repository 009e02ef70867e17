"""Synthetic data generation: determinism, noise statistics, consistency."""

import numpy as np
import pytest

from elastocal.errors import DegenerateDataError
from elastocal.geometry_fit import fit_link_length, identify_compensator_geometry
from elastocal.identification import group_q2
from elastocal.kinematics import forward_kinematics, wrench
from elastocal.simulator import (
    GroundTruth,
    NoiseSpec,
    generate_calibration_dataset,
    simulate_compensator_markers,
    simulate_loaded_measurement,
)
from elastocal.stiffness import predict_marker_deflections

Q2_SWEEP = np.deg2rad([0.0, -30.0, -60.0, -90.0, -120.0, -140.0])


def test_trace_round_trip_recovers_geometry(kr_model, comp):
    truth = GroundTruth(model=kr_model, comp=comp)
    traces = simulate_compensator_markers(truth, Q2_SWEEP, noise=NoiseSpec(0.0, 0))
    fit = identify_compensator_geometry(traces[0], traces[1:])
    assert abs(fit.L - comp.L) < 1e-9
    assert abs(fit.a_x - comp.a_x) < 1e-9
    assert abs(fit.a_y - comp.a_y) < 1e-9


def test_single_q2_trace_breaks_fitters(kr_model, comp):
    truth = GroundTruth(model=kr_model, comp=comp)
    traces = simulate_compensator_markers(truth, [-0.5], noise=NoiseSpec(0.0, 0))
    with pytest.raises(DegenerateDataError):
        fit_link_length(traces[0])


def test_trace_determinism(kr_model, comp):
    truth = GroundTruth(model=kr_model, comp=comp)
    a = simulate_compensator_markers(truth, Q2_SWEEP, noise=NoiseSpec(5e-5, 42))
    b = simulate_compensator_markers(truth, Q2_SWEEP, noise=NoiseSpec(5e-5, 42))
    for ta, tb in zip(a, b):
        assert np.array_equal(ta.positions, tb.positions)
    c = simulate_compensator_markers(truth, Q2_SWEEP, noise=NoiseSpec(5e-5, 43))
    assert not np.array_equal(a[0].positions, c[0].positions)


def test_zero_load_zero_noise_identical_phases(kr_model, comp):
    truth = GroundTruth(model=kr_model, comp=comp)
    q = np.deg2rad([0, -60, 30, 10, -40, 20])
    out = simulate_loaded_measurement(truth, q, np.zeros(6), NoiseSpec(0.0, 0))
    assert len(out) == 3
    for meas in out:
        assert np.array_equal(meas.markers_unloaded, meas.markers_loaded)


def test_linear_truth_reproduced_by_forward_model(kr_model, comp):
    truth = GroundTruth(model=kr_model, comp=comp)
    q = np.deg2rad([10, -50, 25, 20, -35, 45])
    F = wrench([600.0, -400.0, -2000.0])
    meas = simulate_loaded_measurement(truth, q, F, NoiseSpec(0.0, 0), repetitions=1)[0]
    _, markers = forward_kinematics(kr_model, q)
    assert np.max(np.abs(meas.markers_unloaded - markers)) < 1e-12
    expected = markers + predict_marker_deflections(kr_model, comp, q, F)
    assert np.max(np.abs(meas.markers_loaded - expected)) < 1e-12


def test_nonlinear_mode_differs_second_order(kr_model, comp):
    truth = GroundTruth(model=kr_model, comp=comp)
    q = np.deg2rad([10, -50, 25, 20, -35, 45])
    F = wrench([600.0, -400.0, -2000.0])
    lin = simulate_loaded_measurement(truth, q, F, NoiseSpec(0.0, 0), repetitions=1)[0]
    non = simulate_loaded_measurement(
        truth, q, F, NoiseSpec(0.0, 0), repetitions=1, mode="nonlinear"
    )[0]
    gap = np.max(np.abs(lin.markers_loaded - non.markers_loaded))
    defl = np.max(np.abs(lin.markers_loaded - lin.markers_unloaded))
    assert 0.0 < gap < 0.05 * defl


def test_noise_statistics(kr_model, comp):
    sigma = 3e-5
    truth = GroundTruth(model=kr_model, comp=comp)
    q = np.deg2rad([0, -60, 30, 10, -40, 20])
    _, markers = forward_kinematics(kr_model, q)
    samples = []
    reps = simulate_loaded_measurement(
        truth, q, np.zeros(6), NoiseSpec(sigma, 5), repetitions=1200
    )
    for meas in reps:
        samples.append((meas.markers_unloaded - markers).ravel())
    samples = np.concatenate(samples)
    assert samples.size >= 10000
    assert abs(samples.std() - sigma) < 0.05 * sigma


def test_dataset_grouping_and_manifest(kr_model, comp, ident_plan):
    truth = GroundTruth(model=kr_model, comp=comp)
    dataset, manifest = generate_calibration_dataset(
        ident_plan, truth, NoiseSpec(3e-5, 11)
    )
    assert manifest["n_configurations"] == 15
    assert manifest["n_q2_groups"] == 5
    assert manifest["repetitions"] == 3
    assert len(dataset) == 45
    ids, values = group_q2([m.q[1] for m in dataset])
    assert values.size == 5
    assert len(manifest["truth_digest"]) == 16


def test_empty_plan_rejected(kr_model, comp):
    truth = GroundTruth(model=kr_model, comp=comp)
    with pytest.raises(DegenerateDataError):
        generate_calibration_dataset([], truth, NoiseSpec(0.0, 0))


def test_dataset_determinism(kr_model, comp, ident_plan):
    truth = GroundTruth(model=kr_model, comp=comp)
    a, _ = generate_calibration_dataset(ident_plan, truth, NoiseSpec(3e-5, 21))
    b, _ = generate_calibration_dataset(ident_plan, truth, NoiseSpec(3e-5, 21))
    for ma, mb in zip(a, b):
        assert np.array_equal(ma.markers_unloaded, mb.markers_unloaded)
        assert np.array_equal(ma.markers_loaded, mb.markers_loaded)


def test_truth_digest_tracks_parameters(kr_model, comp):
    t1 = GroundTruth(model=kr_model, comp=comp)
    from elastocal.stiffness import CompensatorModel

    other = CompensatorModel(
        L=comp.L * 1.001, a_x=comp.a_x, a_y=comp.a_y,
        K_c=comp.K_c, s_0=comp.s_0, K_theta2_0=comp.K_theta2_0,
    )
    t2 = GroundTruth(model=kr_model, comp=other)
    assert t1.digest() != t2.digest()
    assert t1.digest() == GroundTruth(model=kr_model, comp=comp).digest()
