"""Steering laws: the guiding-field controller and the LOS / NGL baselines.

The guiding-field law is omega = omega_d - k_delta * delta.  The baselines
need a parametric form of the path (they are defined for the built-ins only):

* LOS steers at the bearing of the point a lookahead distance ahead along the
  tangent at the projection, with curvature feedforward:
  omega = c(P) u_r - k_los * wrap(alpha - alpha_los).
* NGL steers at the bearing of the intersection of the robot-centered circle
  of radius R with the path that lies ahead in the traversal direction:
  omega = -k_r * wrap(alpha - alpha_r).

Angle differences are wrapped to (-pi, pi] before multiplying by gains.
Curvature is signed for the chosen traversal direction (negative when the
built-in closed paths are followed forward, i.e. clockwise).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import field as gvf
from .paths import BOUNDARY_SAMPLES
from .util import bisect_root, golden_min, wrap_angle


class Direction(enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


class AmbiguousProjectionError(RuntimeError):
    """Two projection candidates are equidistant; the projection is undefined."""


class GuidanceInfeasibleError(RuntimeError):
    """The guidance construction has no solution at the current pose."""


@dataclass(frozen=True)
class LosParams:
    lookahead: float
    k_los: float
    direction: Direction = Direction.FORWARD

    def __post_init__(self):
        if self.lookahead <= 0.0 or self.k_los <= 0.0:
            raise ValueError("LosParams requires lookahead > 0 and k_los > 0")


@dataclass(frozen=True)
class NglParams:
    radius: float
    k_r: float
    direction: Direction = Direction.FORWARD

    def __post_init__(self):
        if self.radius <= 0.0 or self.k_r <= 0.0:
            raise ValueError("NglParams requires radius > 0 and k_r > 0")


@dataclass
class ControlSample:
    """Per-step guiding-field controller diagnostics."""

    omega: float
    delta: float
    omega_d: float
    e: float
    regular: bool


@dataclass
class Projection:
    """Closest point on the path with traversal-signed curvature and tangent."""

    point: np.ndarray
    s: float
    distance: float
    curvature: float
    tangent: np.ndarray


def gvf_control(path, errmap, params, pose):
    """Turn-rate command omega = omega_d - k_delta * delta at the pose.

    At degenerate points regular is False and omega is 0; the simulator's
    hold-last policy and termination handling take over from there.
    """
    out = gvf.steering_arrays(path, errmap, params, pose.x, pose.y, pose.alpha)
    regular = bool(out["regular"])
    return ControlSample(
        omega=float(out["omega"]),
        delta=float(out["delta"]) if regular else math.nan,
        omega_d=float(out["omega_d"]) if regular else math.nan,
        e=float(out["e"]),
        regular=regular,
    )


PROJECTION_SEEDS = 1024
# Two refined minima closer than this in distance make the projection
# ambiguous (the classic case: the center of an ellipse).
PROJECTION_TIE_TOL = 1e-6


def _signed_curvature(path, point):
    """Curvature of the level set through `point`, signed for forward traversal.

    For a curve traversed with velocity tau = E grad(phi) the signed
    curvature is -tau^T H tau / |grad|^3 (exact; -1 on the unit circle).
    """
    g = path.grad(point)
    h = path.hess(point)
    tx, ty = g[1], -g[0]
    num = tx * (h[0, 0] * tx + h[0, 1] * ty) + ty * (h[1, 0] * tx + h[1, 1] * ty)
    nn = math.hypot(g[0], g[1])
    return -num / nn**3


def project_to_path(path, point, direction=Direction.FORWARD):
    """Global projection of a point onto a parametric path.

    Seeds a global search with 1024 boundary samples, refines every local
    minimum by golden section to ~1e-9 in s, and raises
    AmbiguousProjectionError when the two best distinct minima tie within
    1e-6 in distance.
    """
    if not path.has_parametric:
        raise ValueError("projection requires a path with a parametric form")
    p = np.asarray(point, dtype=float)
    # The seed parameters k/1024 index every 4th cached boundary sample.
    seed_pts = path._boundary_pts[:: BOUNDARY_SAMPLES // PROJECTION_SEEDS]
    d_seed = np.hypot(*(seed_pts - p).T)

    if path.closed:
        left = np.roll(d_seed, 1)
        right = np.roll(d_seed, -1)
        is_min = (d_seed <= left) & (d_seed <= right)
    else:
        left = np.r_[np.inf, d_seed[:-1]]
        right = np.r_[d_seed[1:], np.inf]
        is_min = (d_seed <= left) & (d_seed <= right)

    h = 1.0 / PROJECTION_SEEDS

    def dist_at(s):
        if path.closed:
            s = s % 1.0
        return float(np.hypot(*(path.point(s) - p)))

    minima = []
    for k in np.flatnonzero(is_min):
        lo, hi = k * h - h, k * h + h
        if not path.closed:
            lo, hi = max(lo, 0.0), min(hi, 1.0 - 1e-12)
        s_star, d_star = golden_min(dist_at, lo, hi, iters=45)
        if path.closed:
            s_star = s_star % 1.0
        minima.append((d_star, s_star))

    minima.sort()
    # Merge refinements that landed on the same parameter value.
    distinct = []
    for d_star, s_star in minima:
        dup = False
        for _, s_prev in distinct:
            ds = abs(s_star - s_prev)
            if path.closed:
                ds = min(ds, 1.0 - ds)
            if ds < 1e-6:
                dup = True
                break
        if not dup:
            distinct.append((d_star, s_star))
    if len(distinct) >= 2 and distinct[1][0] - distinct[0][0] < PROJECTION_TIE_TOL:
        raise AmbiguousProjectionError(
            f"projection of ({p[0]}, {p[1]}) is ambiguous: distances "
            f"{distinct[0][0]:.9g} and {distinct[1][0]:.9g}"
        )

    d_best, s_best = distinct[0]
    proj = path.point(s_best)
    g = path.grad(proj)
    nn = math.hypot(g[0], g[1])
    tangent = np.array([g[1], -g[0]]) / nn
    curv = _signed_curvature(path, proj)
    if direction is Direction.REVERSE:
        tangent = -tangent
        curv = -curv
    return Projection(point=proj, s=float(s_best), distance=float(d_best),
                      curvature=float(curv), tangent=tangent)


@dataclass
class BaselineSample:
    """Per-step diagnostics of a baseline law."""

    omega: float
    bearing: float        # alpha_los or alpha_r
    heading_error: float  # wrap(alpha - bearing)
    feedforward: float    # c(P) * u_r for LOS, 0 for NGL
    target: np.ndarray    # the aimed-at point
    target_s: float       # its parametric coordinate (projection's for LOS)


def los_sample(path, params, pose, u_r):
    proj = project_to_path(path, (pose.x, pose.y), params.direction)
    target = proj.point + params.lookahead * proj.tangent
    alpha_los = math.atan2(target[1] - pose.y, target[0] - pose.x)
    herr = wrap_angle(pose.alpha - alpha_los)
    ffwd = proj.curvature * u_r
    return BaselineSample(omega=ffwd - params.k_los * herr, bearing=alpha_los,
                          heading_error=herr, feedforward=ffwd,
                          target=target, target_s=proj.s)


def los_control(path, params, pose, u_r):
    """LOS turn rate: curvature feedforward plus bearing-error feedback."""
    return los_sample(path, params, pose, u_r).omega


NGL_SCAN_SAMPLES = BOUNDARY_SAMPLES  # the scan reuses the cached boundary samples
NGL_REFINE_TOL = 1e-8


def _circle_intersections(path, center, radius):
    """Parameters s where |path.point(s) - center| = radius.

    Sign-change scan over 4096 samples followed by bisection to 1e-8 in s.
    """
    n = NGL_SCAN_SAMPLES
    h = 1.0 / n
    f_grid = np.hypot(*(path._boundary_pts - center).T) - radius

    fa = f_grid if path.closed else f_grid[:-1]
    fb = np.roll(f_grid, -1) if path.closed else f_grid[1:]
    crossing = np.flatnonzero((fa == 0.0) | (fa * fb < 0.0))

    def f(s):
        if path.closed:
            s = s % 1.0
        return float(np.hypot(*(path.point(s) - center))) - radius

    iters = max(1, math.ceil(math.log2(h / NGL_REFINE_TOL)))
    hits = []
    for k in crossing:
        if f_grid[k] == 0.0:
            hits.append(k * h)
            continue
        s = bisect_root(f, k * h, (k + 1) * h, fa=f_grid[k], fb=f_grid[(k + 1) % n],
                        iters=iters)
        hits.append(s % 1.0 if path.closed else s)
    return hits


def ngl_sample(path, params, pose):
    if not path.has_parametric:
        raise ValueError("the NGL baseline requires a path with a parametric form")
    center = np.array([pose.x, pose.y])
    hits = _circle_intersections(path, center, params.radius)
    if not hits:
        raise GuidanceInfeasibleError(
            f"circle of radius {params.radius} around ({pose.x}, {pose.y}) "
            "does not intersect the path"
        )
    proj = project_to_path(path, center, params.direction)

    def ahead_offset(s):
        d = s - proj.s if params.direction is Direction.FORWARD else proj.s - s
        if path.closed:
            d = d % 1.0
        return d

    ahead = [(ahead_offset(s), s) for s in hits if ahead_offset(s) > 0.0]
    if not ahead:
        raise GuidanceInfeasibleError(
            "no circle-path intersection lies ahead in the traversal direction"
        )
    _, s_target = min(ahead)
    target = path.point(s_target)
    alpha_r = math.atan2(target[1] - pose.y, target[0] - pose.x)
    herr = wrap_angle(pose.alpha - alpha_r)
    return BaselineSample(omega=-params.k_r * herr, bearing=alpha_r,
                          heading_error=herr, feedforward=0.0,
                          target=target, target_s=float(s_target))


def ngl_control(path, params, pose):
    """NGL turn rate toward the circle-path intersection lying ahead."""
    return ngl_sample(path, params, pose).omega
