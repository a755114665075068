import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvfpath import (
    ArctanPower,
    ContourNotFoundError,
    IdentityMap,
    PathError,
    PolynomialPath,
    RationalSignPower,
    Region,
    check_derivatives,
    distance_to_path,
    eval_error,
    eval_path,
    make_error_map,
    make_path,
)
from gvfpath.util import PADDED_WORKSPACE

ALL_MAPS = [IdentityMap(), ArctanPower(1.0), ArctanPower(2.0),
            RationalSignPower(1.0), RationalSignPower(3.0)]


def test_make_path_experiment_ellipse(ellipse):
    built = make_path("ellipse", dict(x0=600, y0=350, R=400, p=1.0, q=0.5, k_s=1e-5))
    assert built == ellipse


def test_make_path_rejects_bad_params():
    with pytest.raises(PathError):
        make_path("ellipse", dict(x0=0, y0=0, R=-1.0, p=1.0, q=1.0, k_s=1.0))
    with pytest.raises(PathError):
        make_path("cassini", dict(x0=0, y0=0, p=1.0, q=2.0, k_s=1.0))  # two loops
    with pytest.raises(PathError):
        make_path("line", dict(a=0.0, b=0.0, c=1.0))
    with pytest.raises(PathError):
        make_path("superellipse", dict())
    with pytest.raises(PathError):
        make_path("circle", dict(x0=0, y0=0, radius=1.0, k_s=1.0, bogus=2.0))


def test_eval_path_ellipse_points(ellipse):
    on = eval_path(ellipse, (1000.0, 350.0))
    assert on.phi == pytest.approx(0.0, abs=1e-12)
    assert on.grad == pytest.approx([0.008, 0.0], abs=1e-15)

    center = eval_path(ellipse, (600.0, 350.0))
    assert center.phi == pytest.approx(-1.6, abs=1e-12)
    assert np.hypot(*center.grad) == 0.0
    assert center.hess == pytest.approx(np.diag([2e-5, 8e-5]))


def test_eval_path_cassini_locus(cassini):
    s = eval_path(cassini, (900.0, 350.0))
    assert np.hypot(*s.grad) == 0.0
    assert s.phi == pytest.approx(-1.185921, abs=1e-9)


def test_line_constant_derivatives(line_y0):
    s = eval_path(line_y0, (3.0, 7.0))
    assert s.phi == 7.0
    assert s.grad == pytest.approx([0.0, 1.0])
    assert not s.hess.any()


def test_hessian_symmetric_everywhere(ellipse, cassini, rng):
    pts = PADDED_WORKSPACE.sample(rng, 500)
    for path in (ellipse, cassini):
        h = path.hess(pts)
        assert np.array_equal(h[:, 0, 1], h[:, 1, 0])


@pytest.mark.parametrize("fixture", ["ellipse", "cassini", "line_y0", "unit_circle"])
def test_parametric_form_lies_on_zero_set(fixture, request):
    path = request.getfixturevalue(fixture)
    s = np.linspace(0.0, 1.0, 2048, endpoint=False)
    assert np.abs(path.phi(path.point(s))).max() < 1e-9


def test_eval_error_examples():
    assert eval_error(IdentityMap(), 4.8) == (4.8, 1.0)
    e, pp = eval_error(ArctanPower(1.0), 1.0)
    assert e == pytest.approx(math.pi / 4)
    assert pp == pytest.approx(0.5)
    for errmap in ALL_MAPS:
        assert eval_error(errmap, 0.0) == (0.0, pytest.approx(errmap.psi_prime(0.0)))
        assert errmap.psi(0.0) == 0.0


def test_error_map_power_validation():
    with pytest.raises(ValueError):
        ArctanPower(0.5)
    with pytest.raises(ValueError):
        make_error_map("identity", p=2.0)
    with pytest.raises(ValueError):
        make_error_map("tanh")


@pytest.mark.parametrize("errmap", ALL_MAPS, ids=lambda m: repr(m))
def test_psi_prime_supremum_matches_dense_scan(errmap):
    # Oracle: dense scan of psi' over a wide grid never beats the closed form,
    # and comes within 1e-6 of it somewhere.
    s = np.concatenate([np.linspace(-60, 60, 400001), [0.0]])
    vals = errmap.psi_prime(s)
    sup = errmap.psi_prime_sup()
    assert vals.max() <= sup * (1 + 1e-12)
    assert vals.max() > sup - 1e-6


@settings(max_examples=200)
@given(s1=st.floats(-50, 50), gap=st.floats(1e-6, 10))
@pytest.mark.parametrize("errmap", ALL_MAPS, ids=lambda m: repr(m))
def test_psi_strictly_increasing(errmap, s1, gap):
    assert errmap.psi(s1 + gap) > errmap.psi(s1)


# |phi| is kept above 1e-60: |phi|^p underflows to zero for p >= 2 below
# roughly 1e-154, where no float error map can stay sign-definite.
@settings(max_examples=200)
@given(phi=st.one_of(st.just(0.0),
                     st.floats(-1e4, 1e4).filter(lambda v: abs(v) > 1e-60)))
@pytest.mark.parametrize("errmap", ALL_MAPS, ids=lambda m: repr(m))
def test_error_vanishes_iff_phi_vanishes(errmap, phi):
    e, _ = eval_error(errmap, phi)
    if phi == 0.0:
        assert e == 0.0
    else:
        assert e != 0.0 and math.copysign(1.0, e) == math.copysign(1.0, phi)


def test_distance_examples(ellipse, line_y0):
    assert distance_to_path(ellipse, (1000.0, 350.0)) < 1e-6
    # Oracle for the center: dense sampling of the boundary.
    s = np.linspace(0.0, 1.0, 200000, endpoint=False)
    dense = np.min(np.hypot(*(ellipse.point(s) - np.array([600.0, 350.0])).T))
    d = distance_to_path(ellipse, (600.0, 350.0))
    assert d == pytest.approx(dense, rel=1e-9)
    assert d == pytest.approx(200.0, abs=1e-6)  # the semiminor axis q*R
    assert distance_to_path(line_y0, (3.0, 5.0)) == pytest.approx(5.0, abs=1e-9)


def test_distance_many_matches_refined(ellipse, rng):
    pts = PADDED_WORKSPACE.sample(rng, 50)
    coarse = ellipse.distance_many(pts)
    refined = np.array([distance_to_path(ellipse, p) for p in pts])
    # Sampled distance can overestimate by at most about half a sample spacing.
    spacing = 2000.0 / 4096
    assert np.all(coarse >= refined - 1e-9)
    assert np.all(coarse - refined < spacing)


def test_polynomial_path_contour_distance():
    circle = PolynomialPath(terms=((2, 0, 1.0), (0, 2, 1.0), (0, 0, -1.0)),
                            region=Region(-2.0, 2.0, -2.0, 2.0))
    assert distance_to_path(circle, (2.0, 0.0)) == pytest.approx(1.0, abs=0.01)
    assert distance_to_path(circle, (0.0, 0.0)) == pytest.approx(1.0, abs=0.01)


def test_polynomial_matches_circle_derivatives(unit_circle):
    poly = PolynomialPath(terms=((2, 0, 1.0), (0, 2, 1.0), (0, 0, -1.0)))
    pts = np.array([[0.3, -1.2], [2.0, 0.5], [-4.0, 3.0]])
    assert poly.phi(pts) == pytest.approx(unit_circle.phi(pts))
    assert poly.grad(pts) == pytest.approx(unit_circle.grad(pts))
    assert poly.hess(pts) == pytest.approx(unit_circle.hess(pts))


def test_contour_not_found():
    nowhere = PolynomialPath(terms=((2, 0, 1.0), (0, 2, 1.0), (0, 0, 1.0)),
                             region=Region(-2.0, 2.0, -2.0, 2.0))
    with pytest.raises(ContourNotFoundError):
        distance_to_path(nowhere, (0.0, 0.0))


def test_contour_zero_on_grid_node():
    # The only zero sits exactly on a raster node; it still counts as contour.
    point_zero = PolynomialPath(terms=((2, 0, 1.0), (0, 2, 1.0)),
                                region=Region(0.0, 1.0, 0.0, 1.0))
    assert distance_to_path(point_zero, (0.5, 0.0)) == pytest.approx(0.5, abs=1e-9)


def test_check_derivatives_examples(ellipse, cassini, line_y0):
    assert check_derivatives(ellipse, (472.0, 311.0), h=1e-4) < 1e-5
    assert check_derivatives(cassini, (106.0, 202.0), h=1e-3) < 1e-4
    assert check_derivatives(line_y0, (812.0, -13.0)) < 1e-12
    with pytest.raises(ValueError):
        check_derivatives(ellipse, (0.0, 0.0), h=-1.0)


# Each path is sampled over a region matched to its scale: the default step
# heuristic balances truncation and roundoff only when phi is O(1) there.
@pytest.mark.parametrize("fixture,box", [
    ("ellipse", PADDED_WORKSPACE),
    ("cassini", PADDED_WORKSPACE),
    ("line_y0", PADDED_WORKSPACE),
    ("unit_circle", Region(-3.0, 3.0, -3.0, 3.0)),
])
def test_derivative_oracle_random_points(fixture, box, request, rng):
    path = request.getfixturevalue(fixture)
    worst = max(check_derivatives(path, p) for p in box.sample(rng, 200))
    assert worst < 1e-4


@pytest.mark.parametrize("kappa", [10.0, 50.0, 200.0])
def test_error_separated_from_zero_off_path(ellipse, cassini, identity, kappa, rng):
    # Far from the path the tracking error must be bounded away from zero.
    for path in (ellipse, cassini):
        pts = PADDED_WORKSPACE.sample(rng, 10000)
        far = path.distance_many(pts) >= kappa
        assert far.any()
        e = np.abs(identity.psi(path.phi(pts[far])))
        assert e.min() > 0.0
