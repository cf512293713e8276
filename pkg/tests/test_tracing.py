import numpy as np
import pytest

from ballspectra import fields
from ballspectra.eigenbasis import EigenField, MultiIndex, normalized_record
from ballspectra.tracing import (STOP_LEFT_BALL, STOP_MAX_STEPS, STOP_STAGNATION, TraceConfig,
                                 flux_function, run_traces, trace_fieldline)


def test_config_validation():
    with pytest.raises(ValueError):
        TraceConfig([(0, 0, 0.5)], step=0.0)
    with pytest.raises(ValueError):
        TraceConfig([(1.0, 0, 0)])
    assert TraceConfig([(0, 0, 0.5)]).index == MultiIndex(1, 1, 0)


def test_rigid_rotation_circles():
    tr = trace_fieldline(fields.rigid, (0.5, 0, 0), 0.01, 2000, 1.0)
    assert tr.stop_reason == STOP_MAX_STEPS
    np.testing.assert_allclose(np.hypot(tr.points[:, 0], tr.points[:, 1]), 0.5, atol=1e-9)
    np.testing.assert_allclose(tr.arclength[-1], 20.0)


def test_leaving_the_ball():
    tr = trace_fieldline(fields.radial_gradient, (0.1, 0.2, 0.0), 0.05, 1000, 1.0)
    assert tr.stop_reason == STOP_LEFT_BALL
    assert np.linalg.norm(tr.points[-1]) <= 1.0


def test_stagnation():
    tr = trace_fieldline(lambda p: np.zeros(3), (0.1, 0, 0), 0.1, 10, 1.0)
    assert tr.stop_reason == STOP_STAGNATION and len(tr.points) == 1


def test_axis_seed_stays_on_axis():
    (tr,) = run_traces(TraceConfig([(0, 0, 0.5)], max_steps=2000))
    assert np.max(np.abs(tr.points[:, 0]) + np.abs(tr.points[:, 1])) <= 1e-8
    assert tr.points[-1, 2] > 0.9


def test_flux_function_constant_along_short_trace():
    (tr,) = run_traces(TraceConfig([(0.4, 0, 0.2)], max_steps=500))
    assert tr.flux_drift() < 1e-10
    assert np.max(np.linalg.norm(tr.points, axis=1)) < 1.0


def test_flux_drift_order():
    rec = normalized_record(MultiIndex(1, 1, 0))
    f = EigenField(rec)
    drift = []
    for h in (0.08, 0.04):
        tr = trace_fieldline(f, (0.4, 0, 0.2), h, int(4.0 / h), 1.0)
        psi = flux_function(rec, tr.points)
        drift.append(np.max(np.abs(psi - psi[0])) / abs(psi[0]))
    assert drift[0] / drift[1] >= 8


def test_flux_only_for_axisymmetric_curl():
    (tr,) = run_traces(TraceConfig([(0.3, 0, 0.1)], max_steps=5, index=MultiIndex(2, 1, 1)))
    assert tr.flux is None and tr.flux_drift() == 0.0
