"""Critical-point search and classification, invariant set, viability bounds.

Critical points are zeros of the gradient of phi.  At a critical point the
linearization of the raw field has Jacobian J = (E - k_n e I) H with

    tr J  = -k_n e tr H,      det J = (1 + k_n^2 e^2) det H,

so the sign pattern of the eigenvalues of e*H decides the fate of nearby
integral curves: e*H negative definite makes the point repulsive (no curve
converges to it), exactly one negative eigenvalue leaves a stable set of
zero measure, and anything else can potentially trap trajectories.

The invariant set for the closed loop is

    M = { (x, y, alpha) : n != 0, |delta| < arctan(k_n e_c), |e| < e_c }

with e_c the minimum of |e| over critical points (+inf when there are none).
Runs starting in M satisfy |e(t)| <= max(|e(0)|, |tan delta(0)| / k_n).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import field as gvf
from .util import PADDED_WORKSPACE, bisect_root

NEWTON_GRAD_TOL = 1e-12
NEWTON_MAX_ITER = 60
MERGE_RADIUS = 1e-6
# A Hessian eigenvalue is treated as zero below either threshold: a fraction
# of the other eigenvalue, or an absolute floor (catches H ~ 0 entirely, as
# at the flat root of x^4 + y^4).
SINGULAR_EIG_RATIO = 1e-9
SINGULAR_EIG_FLOOR = 1e-12


class Classification(enum.Enum):
    REPULSIVE = "repulsive"
    SADDLE_ZERO_MEASURE = "saddle_zero_measure"
    POTENTIAL_TRAP = "potential_trap"


@dataclass
class CriticalPoint:
    location: np.ndarray
    e_value: float
    hessian_eigs: tuple
    classification: Classification
    trace_j: float
    det_j: float


@dataclass
class CriticalPointSearch:
    """Converged gradient zeros: classifiable locations plus any roots where
    the Hessian is singular (reported, never dropped)."""

    locations: list
    unclassifiable: list

    def __iter__(self):
        return iter(self.locations)

    def __len__(self):
        return len(self.locations)


@dataclass(frozen=True)
class InvariantSetSpec:
    e_c: float
    k_n: float

    @property
    def delta_band(self):
        """Half-width of the admissible heading band, arctan(k_n e_c)."""
        return math.atan(self.k_n * self.e_c)


def find_critical_points(path, region=None, grid_n=64, merge_radius=MERGE_RADIUS):
    """Newton search for gradient zeros from a grid of seeds.

    Seeds a grid_n x grid_n lattice over the region (default: the path's
    working region or the padded workspace), iterates Newton steps with the
    Hessian as Jacobian, keeps roots with |grad| < 1e-12, merges duplicates
    within merge_radius, and sorts lexicographically.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    if region is None:
        region = getattr(path, "region", PADDED_WORKSPACE)
    pts = region.grid(grid_n, grid_n).astype(float)

    for _ in range(NEWTON_MAX_ITER):
        g = path.grad(pts)
        h = path.hess(pts)
        det = h[:, 0, 0] * h[:, 1, 1] - h[:, 0, 1] * h[:, 1, 0]
        ok = np.isfinite(det) & (np.abs(det) > 0.0) & np.isfinite(g).all(axis=1)
        inv_det = np.where(ok, det, 1.0)
        dx = (h[:, 1, 1] * g[:, 0] - h[:, 0, 1] * g[:, 1]) / inv_det
        dy = (-h[:, 1, 0] * g[:, 0] + h[:, 0, 0] * g[:, 1]) / inv_det
        step = np.stack([dx, dy], axis=-1)
        step[~ok] = 0.0
        pts = pts - step

    g = path.grad(pts)
    good = np.isfinite(pts).all(axis=1)
    good &= np.hypot(g[:, 0], g[:, 1]) < NEWTON_GRAD_TOL
    roots = pts[good]

    merged = []
    for p in roots:
        for q in merged:
            if np.hypot(p[0] - q[0], p[1] - q[1]) < merge_radius:
                break
        else:
            merged.append(p)
    merged.sort(key=lambda p: (p[0], p[1]))

    locations, unclassifiable = [], []
    for p in merged:
        eigs = np.linalg.eigvalsh(path.hess(p))
        cutoff = max(SINGULAR_EIG_RATIO * abs(eigs).max(), SINGULAR_EIG_FLOOR)
        if abs(eigs).min() <= cutoff:
            unclassifiable.append(np.asarray(p))
        else:
            locations.append(np.asarray(p))
    return CriticalPointSearch(locations=locations, unclassifiable=unclassifiable)


def classify_critical_point(path, errmap, k_n, location):
    """Classification of a verified critical point from the signs of e*H."""
    loc = np.asarray(location, dtype=float)
    g = path.grad(loc)
    if np.hypot(g[0], g[1]) >= 1e-9:
        raise ValueError(
            f"({loc[0]}, {loc[1]}) is not a critical point: |grad| = "
            f"{np.hypot(g[0], g[1]):.3g}"
        )
    e = float(errmap.psi(path.phi(loc)))
    h = path.hess(loc)
    eigs = np.linalg.eigvalsh(h)
    eh_eigs = np.sort(e * eigs)
    neg = int(np.sum(eh_eigs < 0.0))
    if neg == 2:
        cls = Classification.REPULSIVE
    elif neg == 1:
        cls = Classification.SADDLE_ZERO_MEASURE
    else:
        cls = Classification.POTENTIAL_TRAP

    tr_j = -k_n * e * float(np.trace(h))
    det_j = (1.0 + k_n**2 * e**2) * float(np.linalg.det(h))
    # Linearization sign identities behind the classification.
    if cls is Classification.REPULSIVE and not (tr_j > 0.0 and det_j > 0.0):
        raise RuntimeError(f"repulsive point violates tr J > 0, det J > 0 at {loc}")
    if cls is Classification.SADDLE_ZERO_MEASURE and not det_j < 0.0:
        raise RuntimeError(f"saddle point violates det J < 0 at {loc}")
    return CriticalPoint(
        location=loc,
        e_value=e,
        hessian_eigs=(float(eigs[0]), float(eigs[1])),
        classification=cls,
        trace_j=tr_j,
        det_j=det_j,
    )


def critical_error_threshold(path, errmap, critical_points):
    """e_c = min |e| over the critical set; +inf when the set is empty."""
    locs = list(critical_points)
    if not locs:
        return math.inf
    return float(min(abs(float(errmap.psi(path.phi(np.asarray(p, dtype=float)))))
                     for p in locs))


def invariant_set_spec(path, errmap, k_n, critical_points=None, region=None):
    if critical_points is None:
        found = find_critical_points(path, region=region)
        critical_points = list(found.locations) + list(found.unclassifiable)
    return InvariantSetSpec(
        e_c=critical_error_threshold(path, errmap, critical_points), k_n=k_n)


def in_invariant_set(path, errmap, k_n, e_c, pose, degeneracy_eps=1e-9):
    """Strict membership test for M (regular, |delta| and |e| inside bounds)."""
    pt = np.array([pose.x, pose.y])
    g = path.grad(pt)
    if np.hypot(g[0], g[1]) <= degeneracy_eps:
        return False
    e = float(errmap.psi(path.phi(pt)))
    if not abs(e) < e_c:
        return False
    fs = gvf.field_arrays(path, errmap, k_n, pt, eps=degeneracy_eps)
    delta = gvf.heading_error(fs["m_d"], pose.alpha)
    return abs(delta) < math.atan(k_n * e_c)


@dataclass
class ViabilityReport:
    d0_lower_bound: float
    rhs_viability_1: float
    rhs_viability_2: float
    guaranteed: bool


VIABILITY_RASTER = 512


def viability_check(path, errmap, pose0, e_c, params, lipschitz_c=None,
                    region=None):
    """Finite-time capture test of the invariant set from an initial pose.

    d0 is a lower bound on the distance from pose0 to {|e| >= e_c}: from the
    Lipschitz constant of e when given, else measured on a raster of the
    working region.  The capture bounds are

        rhs_1 = (u_r/k_delta) ln(|delta(0)| / arctan(k_n e_c))   (0 if already
                inside the heading band)
        rhs_2 = (u_r/k_delta) ln(pi / arctan(k_n e_c))

    and the convergence guarantee holds when d0 > rhs_1.
    """
    if region is None:
        region = getattr(path, "region", PADDED_WORKSPACE)
    p0 = np.array([pose0.x, pose0.y])
    e0 = float(errmap.psi(path.phi(p0)))
    if not abs(e0) < e_c:
        raise ValueError(f"|e(pose0)| = {abs(e0):.6g} must be below e_c = {e_c:.6g}")

    if lipschitz_c is not None:
        if lipschitz_c <= 0.0:
            raise ValueError("lipschitz_c must be positive")
        d0 = (e_c - abs(e0)) / lipschitz_c
    else:
        d0 = _raster_viability_distance(path, errmap, p0, e_c, region)

    fs = gvf.field_arrays(path, errmap, params.k_n, p0, eps=params.degeneracy_eps)
    if not bool(fs["regular"]):
        raise ValueError("pose0 sits at a degenerate point")
    delta0 = gvf.heading_error(fs["m_d"], pose0.alpha)
    band = math.atan(params.k_n * e_c)
    ratio = abs(delta0) / band
    rhs1 = (params.u_r / params.k_delta) * math.log(ratio) if ratio > 1.0 else 0.0
    rhs2 = (params.u_r / params.k_delta) * math.log(math.pi / band)
    return ViabilityReport(
        d0_lower_bound=float(d0),
        rhs_viability_1=float(rhs1),
        rhs_viability_2=float(rhs2),
        guaranteed=bool(d0 > rhs1),
    )


def _raster_viability_distance(path, errmap, p0, e_c, region):
    if not math.isfinite(e_c):
        return math.inf
    nodes = region.grid(VIABILITY_RASTER, VIABILITY_RASTER)
    e = np.abs(errmap.psi(path.phi(nodes)))
    bad = nodes[e >= e_c]
    if len(bad) == 0:
        return math.inf
    d2 = np.sum((bad - p0) ** 2, axis=1)
    target = bad[np.argmin(d2)]

    # Refine along the segment toward the nearest offending node: the first
    # crossing of |e| = e_c bounds the viability distance from below.
    def f(t):
        q = p0 + t * (target - p0)
        return abs(float(errmap.psi(path.phi(q)))) - e_c

    t_star = bisect_root(f, 0.0, 1.0)
    return float(t_star * np.hypot(*(target - p0)))


def sample_invariant_set(path, errmap, k_n, e_c, n, rng, region=None,
                         margin=0.98, degeneracy_eps=1e-9):
    """n poses sampled strictly inside M, as an (n, 3) array.

    Positions are drawn uniformly over the region subject to |e| < margin*e_c
    and regularity; headings are composed from a heading error drawn uniformly
    in (-margin*band, margin*band).
    """
    if region is None:
        region = getattr(path, "region", PADDED_WORKSPACE)
    band = math.atan(k_n * e_c)
    out = np.empty((0, 3))
    while len(out) < n:
        pts = region.sample(rng, 4 * n)
        fs = gvf.field_arrays(path, errmap, k_n, pts, eps=degeneracy_eps)
        keep = fs["regular"] & (np.abs(fs["e"]) < margin * e_c)
        pts, m_d = pts[keep], fs["m_d"][keep]
        delta = rng.uniform(-margin * band, margin * band, size=len(pts))
        alpha = gvf.compose_heading(m_d, delta)
        out = np.vstack([out, np.column_stack([pts, alpha])])
    return out[:n]
