import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from ballspectra import ballcalc, specfun
from ballspectra.eigenbasis import (CURL, GRADDIV, BallDomain, EigenField, EigenRecord, MultiIndex,
                                    SphericalPoint, SphericalVector, cartesian_to_spherical,
                                    curl_eigenvalue, enumerate_indices, eval_axisym_110,
                                    eval_curl_field, eval_field, eval_graddiv_field,
                                    eval_graddiv_potential, first_basis_fields, graddiv_eigenvalue,
                                    make_record, normalize, normalized_record,
                                    spherical_to_cartesian, to_cartesian, to_spherical)
from ballspectra.errors import IndexRangeError, OperatorKindError, ResolutionError

RHO11 = 4.493409457909064


def test_index_validation():
    with pytest.raises(IndexRangeError):
        MultiIndex(0, 1, 0, CURL, 1)
    with pytest.raises(IndexRangeError):
        MultiIndex(2, 1, 3)
    with pytest.raises(IndexRangeError):
        MultiIndex(1, 0, 0)
    with pytest.raises(IndexRangeError):
        MultiIndex(1, 1, 0, CURL, 0)
    assert MultiIndex(0, 1, 0, GRADDIV, 1).sign == 0


@pytest.mark.parametrize("text,expected", [
    ("curl:1,1,0,+", MultiIndex(1, 1, 0, CURL, 1)),
    ("curl:2,3,-1,-", MultiIndex(2, 3, -1, CURL, -1)),
    ("graddiv:0,2,0", MultiIndex(0, 2, 0, GRADDIV)),
])
def test_index_parse(text, expected):
    assert MultiIndex.parse(text) == expected


def test_index_parse_rejects_garbage():
    with pytest.raises(IndexRangeError):
        MultiIndex.parse("curl:one,1,0")


def test_curl_spectrum_values_and_scaling():
    assert curl_eigenvalue(MultiIndex(1, 1, 0)) == pytest.approx(RHO11, abs=1e-12)
    assert curl_eigenvalue(MultiIndex(1, 1, 0, CURL, -1)) == pytest.approx(-RHO11, abs=1e-12)
    assert curl_eigenvalue(MultiIndex(2, 2, 1), BallDomain(2.0)) == pytest.approx(
        curl_eigenvalue(MultiIndex(2, 2, 1)) / 2, rel=1e-15)


def test_graddiv_spectrum_values():
    alpha = specfun.bessel_prime_zero(1, 1)
    assert graddiv_eigenvalue(MultiIndex(1, 1, 0, GRADDIV)) == pytest.approx(-alpha**2, rel=1e-14)
    assert graddiv_eigenvalue(MultiIndex(0, 1, 0, GRADDIV), BallDomain(0.5)) == pytest.approx(
        -(RHO11 / 0.5) ** 2, rel=1e-14)


@pytest.mark.parametrize("op,n_max,m_max", [(CURL, 3, 3), (GRADDIV, 3, 2)])
def test_enumeration_multiplicity_and_order(op, n_max, m_max):
    idx = enumerate_indices(op, n_max, m_max)
    counts = {}
    for i in idx:
        counts[(i.n, i.m, i.sign)] = counts.get((i.n, i.m, i.sign), 0) + 1
    assert all(c == 2 * n + 1 for (n, _, _), c in counts.items())
    mags = [abs(make_record(i).eigenvalue) for i in idx]
    assert mags == sorted(mags)
    assert len(set(idx)) == len(idx)


def test_enumeration_curl_small_case():
    idx = enumerate_indices(CURL, 1, 1)
    assert len(idx) == 6
    assert [i.sign for i in idx[:2]] == [1, -1]


def test_enumeration_graddiv_order_zero_only():
    idx = enumerate_indices(GRADDIV, 0, 3)
    assert [(i.n, i.m, i.k) for i in idx] == [(0, 1, 0), (0, 2, 0), (0, 3, 0)]


def test_operator_kind_checked():
    rec = make_record(MultiIndex(1, 1, 0))
    with pytest.raises(OperatorKindError):
        eval_graddiv_field(rec, 0.5, 1.0, 0.0)
    with pytest.raises(OperatorKindError):
        eval_curl_field(make_record(MultiIndex(1, 1, 0, GRADDIV)), 0.5, 1.0, 0.0)


def _ck_components(idx, lam, r, theta, phi):
    """Force-free field curl(x chi) + curl curl(x chi)/lam for chi = j_n(lam r) Y, from scipy."""
    n = idx.n
    j = special.spherical_jn(n, lam * r)
    dj = special.spherical_jn(n, lam * r, derivative=True)
    y, dy, dys = specfun.real_harmonic(n, idx.k, theta, phi)
    d_rj = (j + lam * r * dj) / (lam * r)  # (1/(lam r)) d/dr (r j)
    u_r = n * (n + 1) * j / (lam * r) * y
    u_t = j * dys + d_rj * dy
    u_p = -j * dy + d_rj * dys
    return np.stack([u_r, u_t, u_p], axis=-1)


@pytest.mark.parametrize("index", ["curl:1,1,0,+", "curl:1,2,1,-", "curl:2,1,-2,+", "curl:3,2,1,-"])
def test_curl_field_proportional_to_force_free_construction(index):
    idx = MultiIndex.parse(index)
    rec = make_record(idx)
    rng = np.random.default_rng(3)
    r = rng.uniform(0.1, 0.95, 40)
    theta = rng.uniform(0.2, 2.9, 40)
    phi = rng.uniform(0, 2 * math.pi, 40)
    ours = eval_curl_field(rec, r, theta, phi).as_array()
    ref = _ck_components(idx, rec.eigenvalue, r, theta, phi)
    scale = np.sum(ours * ref) / np.sum(ref * ref)
    np.testing.assert_allclose(ours, scale * ref, atol=1e-12)
    assert abs(scale) > 1e-3


@pytest.mark.parametrize("index", ["curl:1,1,0,+", "curl:1,1,0,-", "curl:2,1,1,+", "curl:3,2,-2,-"])
def test_curl_field_is_eigenfield(index):
    rec = normalized_record(MultiIndex.parse(index))
    rep = ballcalc.verify_eigenpair(rec, n_points=60)
    assert rep.eigen_residual < 1e-5
    assert rep.div_residual < 1e-5
    assert rep.boundary_flux < 1e-12


def test_graddiv_field_is_gradient_of_potential():
    rec = make_record(MultiIndex(2, 1, 1, GRADDIV))
    f = EigenField(rec)

    def g(q):
        return eval_graddiv_potential(rec, *cartesian_to_spherical(q))

    pts = ballcalc.interior_points(30, 1.0, 0.05, 1)
    np.testing.assert_allclose(ballcalc.fd_grad(g, pts, 1e-3, 6), f(pts), atol=1e-9)


@pytest.mark.parametrize("index", ["graddiv:0,1,0", "graddiv:1,2,-1", "graddiv:2,1,2"])
def test_graddiv_normal_trace_vanishes(index):
    rec = make_record(MultiIndex.parse(index))
    theta = np.linspace(0.1, 3.0, 25)
    assert np.max(np.abs(eval_graddiv_field(rec, np.ones(25), theta, 0.7 * theta).u_r)) < 1e-12


def test_spherical_point_and_arrays_agree():
    rec = make_record(MultiIndex(2, 1, -1))
    a = eval_field(rec, SphericalPoint(0.4, 1.1, 2.0))
    b = eval_field(rec, np.array([0.4]), np.array([1.1]), np.array([2.0]))
    np.testing.assert_allclose(a.as_array(), b.as_array()[0], atol=0)


def test_field_regular_at_origin_and_axis():
    for index in ("curl:1,1,0,+", "curl:1,1,1,+", "curl:2,1,0,-", "graddiv:1,1,1"):
        f = EigenField(make_record(MultiIndex.parse(index)))
        vals = f(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.3], [0.0, 0.0, -0.7]]))
        assert np.all(np.isfinite(vals))


def test_axisymmetric_closed_form_is_twice_unit_field():
    rec = EigenRecord(MultiIndex(1, 1, 0), RHO11, c=1.0)
    r, theta, phi = np.linspace(0.05, 1, 20), np.linspace(0.1, 3.0, 20), np.zeros(20)
    closed = eval_axisym_110(r, RHO11, theta, phi).as_array()
    # real_harmonic(1, 0) = sqrt(3 / 4 pi) cos(theta)
    unit = eval_curl_field(rec, r, theta, phi).as_array() / math.sqrt(3 / (4 * math.pi))
    np.testing.assert_allclose(closed, 2 * unit, atol=1e-14)


def _axisym_field(radial_factor):
    def f(q):
        r, theta, phi = cartesian_to_spherical(q)
        v = eval_axisym_110(r, RHO11, theta, phi)
        v = SphericalVector(radial_factor * v.u_r, v.u_theta, v.u_phi)
        return to_cartesian(v, None, theta, phi).as_array()
    return f


def test_axisymmetric_closed_form_residual():
    pts = ballcalc.interior_points(100, 1.0, 0.07, 5)
    f = _axisym_field(1.0)
    res = ballcalc._sup_ratio(ballcalc.fd_curl(f, pts, 0.02, 6) - RHO11 * f(pts), f(pts))
    assert res < 1e-6


def test_axisymmetric_radial_scale_is_forced():
    # multiplying u_r by rho breaks the eigen-relation by far more than 1e-3
    pts = ballcalc.interior_points(100, 1.0, 0.07, 5)
    f = _axisym_field(RHO11)
    res = ballcalc._sup_ratio(ballcalc.fd_curl(f, pts, 0.02, 6) - RHO11 * f(pts), f(pts))
    assert res > 0.1


def test_axis_and_pole_facts():
    f = EigenField(normalized_record(MultiIndex(1, 1, 0)))
    on_axis = f(np.array([[0, 0, z] for z in np.linspace(-0.9, 0.9, 11)]))
    assert np.max(np.abs(on_axis[:, :2])) < 1e-14
    poles = f(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]))
    assert np.max(np.linalg.norm(poles, axis=1)) < 1e-8


@given(r=st.floats(0.01, 2), theta=st.floats(0, math.pi), phi=st.floats(0, 2 * math.pi),
       v=st.tuples(*[st.floats(-5, 5)] * 3))
def test_frame_round_trip(r, theta, phi, v):
    sv = SphericalVector(*v)
    back = to_spherical(to_cartesian(sv, None, theta, phi), theta, phi)
    np.testing.assert_allclose(back.as_array(), sv.as_array(), atol=1e-12)
    p = spherical_to_cartesian(r, theta, phi)
    r2, t2, _ = cartesian_to_spherical(p)
    assert r2 == pytest.approx(r, rel=1e-12)
    assert t2 == pytest.approx(theta, abs=1e-7)


def test_frame_requires_matching_frame():
    with pytest.raises(ValueError):
        to_spherical(SphericalVector(1.0, 0.0, 0.0), 0.1, 0.2)


def test_normalisation_positive_and_stable():
    grid = ballcalc.QuadratureGrid(1.0, 48, 48, 64)
    rec = normalize(make_record(MultiIndex(2, 2, -1, CURL, -1)), grid, check_refinement=True)
    assert rec.c > 0
    assert ballcalc.inner_product(EigenField(rec), EigenField(rec), grid) == pytest.approx(1, abs=1e-12)


def test_normalisation_detects_underresolution():
    coarse = ballcalc.QuadratureGrid(1.0, 4, 4, 6)
    with pytest.raises(ResolutionError):
        normalize(make_record(MultiIndex(3, 3, 2)), coarse, check_refinement=True)


def test_normalised_field_scales_with_radius():
    idx = MultiIndex(1, 1, 1)
    a = normalized_record(idx, 1.0)
    b = normalized_record(idx, 2.0)
    # unit L2 norm in a ball of 8x the volume: c shrinks by 2^(3/2) relative to its r-scaled shape
    fa = eval_field(a, 0.5, 1.0, 0.3).as_array()
    fb = eval_field(b, 1.0, 1.0, 0.3).as_array()
    np.testing.assert_allclose(fb, fa / 2**1.5, rtol=1e-10)


def test_first_basis_fields_mixed_and_sorted():
    idx = first_basis_fields(20)
    assert len(idx) == 20
    assert {i.operator for i in idx} == {CURL, GRADDIV}
    ks = [make_record(i).wavenumber for i in idx]
    assert ks == sorted(ks)
