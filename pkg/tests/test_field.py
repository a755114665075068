import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvfpath import (
    CirclePath,
    DegeneracyError,
    GvfParams,
    Pose,
    guiding_field,
    heading_error,
    rotation_rate,
    wrap_angle,
)
from gvfpath.field import compose_heading, field_arrays, steering_arrays
from gvfpath.util import PADDED_WORKSPACE


def test_gvf_params_validation():
    with pytest.raises(ValueError):
        GvfParams(k_n=0.0, k_delta=1.0, u_r=1.0)
    with pytest.raises(ValueError):
        GvfParams(k_n=1.0, k_delta=1.0, u_r=-2.0)


def test_guiding_field_rightmost_ellipse(ellipse, identity, exp_params):
    g = guiding_field(ellipse, identity, exp_params, (1000.0, 350.0))
    assert g.regular
    assert g.e == 0.0
    assert g.n == pytest.approx([0.008, 0.0])
    assert g.tau == pytest.approx([0.0, -0.008])
    assert g.v == pytest.approx([0.0, -0.008])
    assert g.m_d == pytest.approx([0.0, -1.0])


def test_guiding_field_unit_circle(unit_circle, identity):
    params = GvfParams(k_n=1.0, k_delta=1.0, u_r=1.0)
    g = guiding_field(unit_circle, identity, params, (2.0, 0.0))
    assert g.e == 3.0
    assert g.n == pytest.approx([4.0, 0.0])
    assert g.tau == pytest.approx([0.0, -4.0])
    assert g.v == pytest.approx([-12.0, -4.0])
    assert np.dot(g.v, g.v) == pytest.approx((1 + 1 * 9) * 16, rel=1e-12)


def test_guiding_field_degenerate_center(ellipse, identity, exp_params):
    g = guiding_field(ellipse, identity, exp_params, (600.0, 350.0))
    assert not g.regular
    assert g.m_d is None


def test_field_identities_random_points(ellipse, cassini, identity, rng):
    k_n = 3.0
    for path in (ellipse, cassini):
        pts = PADDED_WORKSPACE.sample(rng, 10000)
        fs = field_arrays(path, identity, k_n, pts)
        r = fs["regular"]
        n2 = fs["n_norm"][r] ** 2
        e = fs["e"][r]
        vtn = np.sum(fs["v"][r] * fs["n"][r], axis=-1)
        vtt = np.sum(fs["v"][r] * fs["tau"][r], axis=-1)
        assert np.max(np.abs(vtn + k_n * e * n2) / n2) < 1e-10
        assert np.max(np.abs(vtt - n2) / n2) < 1e-10
        v2 = fs["v_norm"][r] ** 2
        assert np.max(np.abs(v2 - (1 + k_n**2 * e**2) * n2) / v2) < 1e-10
        assert np.max(np.abs(np.hypot(*fs["m_d"][r].T) - 1.0)) < 1e-12


def test_on_path_field_is_tangent(ellipse, cassini, identity):
    # e = 0 on the path, so v = tau and m_d is orthogonal to the normal.
    s = np.linspace(0.0, 1.0, 512, endpoint=False)
    for path in (ellipse, cassini):
        pts = path.point(s)
        fs = field_arrays(path, identity, 3.0, pts)
        nhat = fs["n"] / fs["n_norm"][:, None]
        assert np.max(np.abs(np.sum(fs["m_d"] * nhat, axis=-1))) < 1e-6


def test_rotation_rate_straight_line(line_y0, identity):
    params = GvfParams(k_n=1.0, k_delta=1.0, u_r=7.0)
    # On the path and aligned with the field: constant field, omega_d = 0.
    assert rotation_rate(line_y0, identity, params, Pose(3.0, 0.0, 0.0)) == 0.0


def test_rotation_rate_unit_circle_curvature(unit_circle, identity):
    params = GvfParams(k_n=1.0, k_delta=1.0, u_r=1.0)
    w = rotation_rate(unit_circle, identity, params, Pose(1.0, 0.0, -math.pi / 2))
    # Clockwise circulation of the unit circle: bearing rate is exactly -1.
    assert w == pytest.approx(-1.0, abs=1e-12)


def test_rotation_rate_degenerate_raises(ellipse, identity, exp_params):
    with pytest.raises(DegeneracyError):
        rotation_rate(ellipse, identity, exp_params, Pose(600.0, 350.0, 0.2))


def _fd_bearing_rate(path, errmap, params, x, y, alpha, h=1e-6):
    ux, uy = math.cos(alpha), math.sin(alpha)

    def bearing(px, py):
        st_ = steering_arrays(path, errmap, params, px, py, alpha)
        return math.atan2(float(st_["m_d"][1]), float(st_["m_d"][0]))

    b1 = bearing(x + params.u_r * ux * h, y + params.u_r * uy * h)
    b0 = bearing(x - params.u_r * ux * h, y - params.u_r * uy * h)
    return wrap_angle(b1 - b0) / (2.0 * h)


@pytest.mark.parametrize("fixture", ["ellipse", "cassini"])
def test_rotation_rate_against_bearing_differences(fixture, request, identity,
                                                   exp_params, rng):
    path = request.getfixturevalue(fixture)
    crit = np.array([[300.0, 350.0], [600.0, 350.0], [900.0, 350.0]])
    n_ok = 0
    while n_ok < 200:
        x, y = PADDED_WORKSPACE.sample(rng, 1)[0]
        if np.min(np.hypot(crit[:, 0] - x, crit[:, 1] - y)) < 5.0:
            continue
        alpha = rng.uniform(-math.pi, math.pi)
        st_ = steering_arrays(path, identity, exp_params, x, y, alpha)
        fd = _fd_bearing_rate(path, identity, exp_params, x, y, alpha)
        assert abs(float(st_["omega_d"]) - fd) < 1e-5
        n_ok += 1


@pytest.mark.parametrize("fixture", ["ellipse", "cassini"])
def test_rotation_identity_md_dot(fixture, request, identity, exp_params, rng):
    # md_dot + omega_d E m_d = 0, with md_dot from centered differences of the
    # m_d components along the motion.
    path = request.getfixturevalue(fixture)
    h = 1e-6
    n_ok = 0
    while n_ok < 100:
        x, y = PADDED_WORKSPACE.sample(rng, 1)[0]
        alpha = rng.uniform(-math.pi, math.pi)
        st0 = steering_arrays(path, identity, exp_params, x, y, alpha)
        if not bool(st0["regular"]) or float(st0["n_norm"]) < 1e-5:
            continue
        ux, uy = math.cos(alpha), math.sin(alpha)
        stp = steering_arrays(path, identity, exp_params,
                              x + exp_params.u_r * ux * h,
                              y + exp_params.u_r * uy * h, alpha)
        stm = steering_arrays(path, identity, exp_params,
                              x - exp_params.u_r * ux * h,
                              y - exp_params.u_r * uy * h, alpha)
        md_dot = (stp["m_d"] - stm["m_d"]) / (2.0 * h)
        m_d = st0["m_d"]
        e_md = np.array([m_d[1], -m_d[0]])
        resid = md_dot + float(st0["omega_d"]) * e_md
        assert np.max(np.abs(resid)) < 1e-5
        n_ok += 1


def test_heading_error_examples():
    assert heading_error((0.0, -1.0), -math.pi / 2) == pytest.approx(0.0, abs=1e-12)
    assert heading_error((0.0, -1.0), 0.0) == pytest.approx(math.pi / 2)
    d = heading_error((1.0, 0.0), math.pi)
    assert d > 0.0 and d == pytest.approx(math.pi)


def test_heading_error_rejects_non_unit():
    with pytest.raises(ValueError):
        heading_error((0.5, 0.0), 0.0)


@settings(max_examples=300)
@given(theta=st.floats(-math.pi, math.pi),
       delta=st.floats(-math.pi + 1e-6, math.pi - 1e-6))
def test_heading_roundtrip(theta, delta):
    m_d = np.array([math.cos(theta), math.sin(theta)])
    alpha = compose_heading(m_d, delta)
    assert heading_error(m_d, alpha) == pytest.approx(delta, abs=1e-9)


@settings(max_examples=300)
@given(theta=st.floats(-math.pi, math.pi),
       delta=st.floats(-math.pi + 1e-6, math.pi - 1e-6))
def test_decompose_reconstructs_heading(theta, delta):
    # m = cos(delta) m_d - sin(delta) E m_d must equal m(alpha).
    m_d = np.array([math.cos(theta), math.sin(theta)])
    alpha = compose_heading(m_d, delta)
    e_md = np.array([m_d[1], -m_d[0]])
    m = math.cos(delta) * m_d - math.sin(delta) * e_md
    assert m == pytest.approx([math.cos(alpha), math.sin(alpha)], abs=1e-12)


def test_circle_field_matches_scaled_circle(identity):
    # k_s rescales phi but not the direction of m_d at regular points.
    a = CirclePath(0.0, 0.0, 100.0, k_s=1.0)
    b = CirclePath(0.0, 0.0, 100.0, k_s=1e-4)
    pts = np.array([[150.0, 20.0], [30.0, -80.0], [-120.0, 5.0]])
    fa = field_arrays(a, identity, 3.0, pts)
    fb = field_arrays(b, identity, 3.0, pts)
    # identical e -> identical m_d requires matching k_n * e; instead check
    # both fields are unit length and tangent on the path itself.
    on = a.point(np.linspace(0, 1, 64, endpoint=False))
    fa = field_arrays(a, identity, 3.0, on)
    fb = field_arrays(b, identity, 3.0, on)
    assert np.allclose(fa["m_d"], fb["m_d"], atol=1e-9)
