import json

import numpy as np
import pytest

from canoncurve import curvemodel
from canoncurve.curvemodel import (CurveModel, ModelRejected, SampleSet, fermat_model, product_evals,
                                   quadric_times_linear, random_model, sample_curve, slice_sample,
                                   validate_model)
from canoncurve.fieldkit import rank_nullspace


def test_random_model_is_deterministic():
    assert random_model(42) == random_model(42)
    assert random_model(42).quadric != random_model(43).quadric


def test_fermat_is_accepted():
    assert validate_model(fermat_model())


def test_cubic_containing_the_quadric_is_rejected():
    m = fermat_model()
    bad = CurveModel(m.quadric, tuple(np.real(quadric_times_linear(m)[0])))
    with pytest.raises(ModelRejected):
        validate_model(bad)


def test_slice_gives_six_points(rng):
    m = random_model(42)
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    pts = slice_sample(m, h)
    assert len(pts) == 6
    for p in pts:
        assert max(abs(m.Q(p.coords)), abs(m.F(p.coords))) <= 1e-12
        assert abs(h @ p.coords) <= 1e-10
        assert np.isclose(np.max(np.abs(p.coords)), 1.0)
    moved = slice_sample(m, h + 1e-6 * (rng.standard_normal(4) + 1j * rng.standard_normal(4)))
    assert len(moved) == 6
    for p in pts:
        assert min(curvemodel.projective_distance(p.coords, q.coords) for q in moved) < 1e-4


def test_sample_set(samples):
    assert len(samples) == 30
    assert max(max(p.residual_Q, p.residual_F) for p in samples.points) <= 1e-12
    assert all(curvemodel.is_smooth_at(samples.model, p.coords) for p in samples.points)


def test_sampling_is_reproducible():
    a = sample_curve(random_model(42), 12, seed=5)
    b = sample_curve(random_model(42), 12, seed=5)
    assert a.dumps() == b.dumps()


def test_json_roundtrip(random_samples):
    back = SampleSet.from_json(json.loads(random_samples.dumps()))
    assert np.array_equal(back.omega_evals, random_samples.omega_evals)
    assert back.model.quadric == random_samples.model.quadric


def test_product_ranks(samples):
    m = samples.model
    r2, ns2 = rank_nullspace(product_evals(samples, 2).T, 1e-8)
    assert (r2, len(ns2)) == (9, 1)
    cos = abs(np.vdot(ns2[0], m.q)) / np.linalg.norm(ns2[0]) / np.linalg.norm(m.q)
    assert cos >= 1 - 1e-8
    r3, ns3 = rank_nullspace(product_evals(samples, 3).T, 1e-8)
    assert (r3, len(ns3)) == (15, 5)
    basis, _ = np.linalg.qr(np.array(ns3).T)
    inside = np.vstack([quadric_times_linear(m), m.f])
    for v in inside:
        assert np.linalg.norm(v - basis @ (basis.conj().T @ v)) <= 1e-8 * np.linalg.norm(v)
    W, _ = np.linalg.qr(quadric_times_linear(m).T)
    assert np.linalg.norm(m.f - W @ (W.conj().T @ m.f)) / np.linalg.norm(m.f) >= 1e-3


def test_ranks_invariant_under_point_rescaling(random_samples):
    om = random_samples.omega_evals * np.exp(0.3j * np.arange(30)) * np.linspace(0.5, 3, 30)
    assert rank_nullspace(product_evals(om, 2).T, 1e-8)[0] == 9
    assert rank_nullspace(product_evals(om, 3).T, 1e-8)[0] == 15
    _, ns = rank_nullspace(product_evals(om, 2).T, 1e-8)
    q = random_samples.model.q
    assert abs(np.vdot(ns[0], q)) / np.linalg.norm(ns[0]) / np.linalg.norm(q) >= 1 - 1e-8


def test_too_few_slices_raises():
    with pytest.raises(curvemodel.SamplingError):
        sample_curve(fermat_model(), 30, seed=0, max_slices=2)
