"""Closed-loop unicycle simulation and integral-curve tracing.

The closed loop integrates

    x' = u_r cos(alpha),  y' = u_r sin(alpha),  alpha' = omega

with fixed-step RK4 and the turn command held constant over each step
(zero-order hold).  Because alpha is then linear in time inside a step, the
position update reduces to a Simpson rule over the stage headings, which is
exactly the classical RK4 for this system.

Every dynamical outcome is an event, not an exception: runs end with
ConvergedToPath, ReachedCriticalSet, Timeout, LeftDomain or
GuidanceInfeasible.  Convergence requires |e| < tol_e and the distance to the
path below tol_d sustained for a dwell window.  Distances used inside the
loop come from the 4096-sample boundary cache (resolution about half a sample
spacing); use `distance_to_path` for refined point queries.

Guiding-field runs execute in a vectorized batch (a single run is a batch of
one), so sweeps over thousands of starts share the exact code path of an
individual simulation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import controllers as ctl
from . import field as gvf
from .paths import PathError
from .util import PADDED_WORKSPACE, wrap_angle

_TINY = 1e-300


class TerminationKind(enum.Enum):
    CONVERGED = "converged_to_path"
    CRITICAL = "reached_critical_set"
    TIMEOUT = "timeout"
    LEFT_DOMAIN = "left_domain"
    INFEASIBLE = "guidance_infeasible"


class TraceMode(enum.Enum):
    RAW = "raw"
    NORMALIZED = "normalized"


class TraceLabel(enum.Enum):
    PATH = "path"
    CRITICAL = "critical"
    ESCAPED = "escaped"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Pose:
    """Unicycle state; alpha is stored wrapped to (-pi, pi]."""

    x: float
    y: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "alpha", wrap_angle(self.alpha))

    @property
    def xy(self):
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class StopPolicy:
    """Termination thresholds; t_dwell = inf disables the convergence stop."""

    tol_e: float = 1e-2
    tol_d: float = 2.0
    t_dwell: float = 5.0
    tol_c: float = 1.0


@dataclass
class TerminationEvent:
    kind: TerminationKind
    t_final: float
    detail: str = ""


@dataclass
class Trajectory:
    """Column-array time series of one run plus the termination event.

    sample(i) views row i as the tuple (t, Pose, ControlSample, dist).
    """

    dt: float
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    e: np.ndarray
    delta: np.ndarray
    omega_d: np.ndarray
    omega: np.ndarray
    dist: np.ndarray
    termination: TerminationEvent

    def __len__(self):
        return len(self.t)

    def pose(self, i):
        return Pose(self.x[i], self.y[i], self.alpha[i])

    def control(self, i):
        return ctl.ControlSample(
            omega=float(self.omega[i]),
            delta=float(self.delta[i]),
            omega_d=float(self.omega_d[i]),
            e=float(self.e[i]),
            regular=bool(np.isfinite(self.delta[i])),
        )

    def sample(self, i):
        return float(self.t[i]), self.pose(i), self.control(i), float(self.dist[i])


def _rk4_step(x, y, alpha, u_r, omega, dt):
    """One RK4 step with omega held constant (Simpson over stage headings)."""
    a_mid = alpha + 0.5 * dt * omega
    a_end = alpha + dt * omega
    x1 = x + dt * u_r / 6.0 * (np.cos(alpha) + 4.0 * np.cos(a_mid) + np.cos(a_end))
    y1 = y + dt * u_r / 6.0 * (np.sin(alpha) + 4.0 * np.sin(a_mid) + np.sin(a_end))
    return x1, y1, a_end


def step_unicycle(pose, u_r, omega, dt):
    """Advance a pose by one RK4 step; dt = 0 returns the pose unchanged."""
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    x, y, a = _rk4_step(pose.x, pose.y, pose.alpha, u_r, omega, dt)
    return Pose(float(x), float(y), float(a))


def _critical_locations(path, region):
    from .analysis import find_critical_points

    found = find_critical_points(path, region=region)
    locs = list(found.locations) + list(found.unclassifiable)
    if not locs:
        return np.zeros((0, 2))
    return np.asarray(locs, dtype=float).reshape(-1, 2)


@dataclass
class BatchResult:
    """Per-run outcome of a batched closed-loop sweep."""

    kind: np.ndarray      # TerminationKind per run (object array)
    t_final: np.ndarray
    x: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    e: np.ndarray
    dist: np.ndarray      # nearest-boundary-sample distance at termination

    def fraction(self, kind):
        return float(np.mean([k is kind for k in self.kind]))


def simulate_gvf_batch(path, errmap, params, poses0, dt, t_max,
                       stop=StopPolicy(), domain=PADDED_WORKSPACE,
                       critical_points=None, record=None):
    """Integrate the guiding-field closed loop for a batch of initial poses.

    poses0: array (B, 3) of (x, y, alpha).  `record`, if given, is called once
    per step as record(t, ids, data) where ids are original run indices of the
    still-active runs and data holds the per-run arrays
    x, y, alpha, e, delta, omega_d, omega, regular, dist (dist is NaN where it
    was not needed for the convergence test).
    """
    if dt <= 0.0 or t_max <= 0.0:
        raise ValueError("dt and t_max must be positive")
    poses0 = np.asarray(poses0, dtype=float).reshape(-1, 3)
    n_runs = len(poses0)
    if n_runs == 0:
        z = np.zeros(0)
        return BatchResult(kind=np.zeros(0, dtype=object), t_final=z, x=z, y=z,
                           alpha=z, e=z, dist=z)
    crit = (np.asarray(critical_points, dtype=float).reshape(-1, 2)
            if critical_points is not None
            else _critical_locations(path, domain))

    x = poses0[:, 0].copy()
    y = poses0[:, 1].copy()
    alpha = poses0[:, 2].copy()
    ids = np.arange(n_runs)
    hold = np.zeros(n_runs)
    dwell = np.zeros(n_runs)

    out_kind = np.full(n_runs, TerminationKind.TIMEOUT, dtype=object)
    out_t = np.full(n_runs, float(t_max))
    out_x = poses0[:, 0].copy()
    out_y = poses0[:, 1].copy()
    out_a = poses0[:, 2].copy()
    out_e = np.zeros(n_runs)
    out_d = np.full(n_runs, np.nan)

    n_steps = int(math.ceil(t_max / dt - 1e-9))
    want_all_dist = record is not None

    for step in range(n_steps + 1):
        t = step * dt
        st = gvf.steering_arrays(path, errmap, params, x, y, alpha)
        e, delta = st["e"], st["delta"]
        omega_d, regular = st["omega_d"], st["regular"]
        omega = np.where(regular, st["omega"], hold)

        dist = np.full(x.shape, np.nan)
        cand = (np.abs(e) < stop.tol_e) | want_all_dist
        if cand.any():
            pts = np.stack([x[cand], y[cand]], axis=-1)
            dist[cand] = path.distance_many(pts)

        if record is not None:
            record(t, ids, {
                "x": x, "y": y, "alpha": alpha, "e": e, "delta": delta,
                "omega_d": omega_d, "omega": omega, "regular": regular,
                "dist": dist,
            })

        # Events, in precedence order: critical set, domain, convergence.
        if len(crit):
            d2c = np.min((x[:, None] - crit[:, 0]) ** 2
                         + (y[:, None] - crit[:, 1]) ** 2, axis=1)
            critical_now = (d2c < stop.tol_c**2) | ~regular
        else:
            critical_now = ~regular
        left_now = ~((x >= domain.xmin) & (x <= domain.xmax)
                     & (y >= domain.ymin) & (y <= domain.ymax))
        holds = (np.abs(e) < stop.tol_e) & (dist < stop.tol_d)
        dwell = np.where(holds, dwell + dt, 0.0)
        converged_now = dwell >= stop.t_dwell
        timeout_now = np.full(x.shape, step == n_steps)

        done = critical_now | left_now | converged_now | timeout_now
        if done.any():
            ii = ids[done]
            kind = np.where(
                critical_now[done], TerminationKind.CRITICAL,
                np.where(left_now[done], TerminationKind.LEFT_DOMAIN,
                         np.where(converged_now[done], TerminationKind.CONVERGED,
                                  TerminationKind.TIMEOUT)))
            out_kind[ii] = kind
            out_t[ii] = t
            out_x[ii], out_y[ii], out_a[ii] = x[done], y[done], alpha[done]
            out_e[ii] = e[done]
            out_d[ii] = dist[done]
            keep = ~done
            if not keep.any():
                break
            x, y, alpha = x[keep], y[keep], alpha[keep]
            ids, dwell = ids[keep], dwell[keep]
            omega = omega[keep]

        x, y, alpha = _rk4_step(x, y, alpha, params.u_r, omega, dt)
        hold = omega

    return BatchResult(kind=out_kind, t_final=out_t, x=out_x, y=out_y,
                       alpha=out_a, e=out_e, dist=out_d)


def _baseline_step_terms(path, controller, pose, u_r):
    """omega plus recorded diagnostics (heading error, feedforward)."""
    if isinstance(controller, ctl.LosParams):
        s = ctl.los_sample(path, controller, pose, u_r)
        return s.omega, s.heading_error, s.feedforward
    s = ctl.ngl_sample(path, controller, pose)
    return s.omega, s.heading_error, 0.0


def simulate(path, errmap, controller, pose0, dt, t_max, stop=StopPolicy(),
             u_r=None, domain=PADDED_WORKSPACE, critical_points=None):
    """Integrate one closed-loop run and return its Trajectory.

    controller is GvfParams (u_r taken from it) or LosParams / NglParams
    (pass the forward speed via u_r).  Dynamical outcomes terminate the run
    with an event; only invalid configuration raises.
    """
    if dt <= 0.0 or t_max <= 0.0:
        raise ValueError("dt and t_max must be positive")

    if isinstance(controller, gvf.GvfParams):
        if u_r is not None and u_r != controller.u_r:
            raise ValueError("u_r is carried by GvfParams; do not pass both")
        return _simulate_gvf_single(path, errmap, controller, pose0, dt, t_max,
                                    stop, domain, critical_points)
    if not isinstance(controller, (ctl.LosParams, ctl.NglParams)):
        raise TypeError(f"unsupported controller {controller!r}")
    if u_r is None or u_r <= 0.0:
        raise ValueError("baseline controllers need a positive u_r")
    if not path.has_parametric:
        raise PathError("baseline controllers require a parametric path")
    return _simulate_baseline(path, errmap, controller, pose0, dt, t_max,
                              stop, u_r, domain, critical_points)


def _simulate_gvf_single(path, errmap, params, pose0, dt, t_max, stop, domain,
                         critical_points):
    rows = {k: [] for k in ("t", "x", "y", "alpha", "e", "delta",
                            "omega_d", "omega", "dist")}

    def record(t, ids, data):
        rows["t"].append(t)
        for k in ("x", "y", "alpha", "e", "delta", "omega_d", "omega", "dist"):
            rows[k].append(float(data[k][0]))

    res = simulate_gvf_batch(
        path, errmap, params, [(pose0.x, pose0.y, pose0.alpha)], dt, t_max,
        stop=stop, domain=domain, critical_points=critical_points, record=record)
    kind = res.kind[0]
    detail = {
        TerminationKind.CONVERGED: "|e| and path distance within tolerance "
                                   f"for {stop.t_dwell} s",
        TerminationKind.CRITICAL: "entered the critical-set neighborhood",
        TerminationKind.TIMEOUT: "t_max reached",
        TerminationKind.LEFT_DOMAIN: "left the working region",
    }[kind]
    return Trajectory(
        dt=dt,
        termination=TerminationEvent(kind, float(res.t_final[0]), detail),
        **{k: np.asarray(v, dtype=float) for k, v in rows.items()},
    )


def _simulate_baseline(path, errmap, controller, pose0, dt, t_max, stop, u_r,
                       domain, critical_points):
    crit = (np.asarray(critical_points, dtype=float).reshape(-1, 2)
            if critical_points is not None
            else _critical_locations(path, domain))
    rows = {k: [] for k in ("t", "x", "y", "alpha", "e", "delta",
                            "omega_d", "omega", "dist")}
    x, y, a = pose0.x, pose0.y, pose0.alpha
    dwell = 0.0
    n_steps = int(math.ceil(t_max / dt - 1e-9))
    event = None

    for step in range(n_steps + 1):
        t = step * dt
        pose = Pose(x, y, a)
        e = float(errmap.psi(path.phi(pose.xy)))
        dist = float(path.distance_many(pose.xy[None])[0])
        try:
            omega, herr, ffwd = _baseline_step_terms(path, controller, pose, u_r)
        except (ctl.GuidanceInfeasibleError, ctl.AmbiguousProjectionError) as exc:
            rows["t"].append(t); rows["x"].append(x); rows["y"].append(y)
            rows["alpha"].append(pose.alpha); rows["e"].append(e)
            rows["delta"].append(math.nan); rows["omega_d"].append(math.nan)
            rows["omega"].append(math.nan); rows["dist"].append(dist)
            event = TerminationEvent(TerminationKind.INFEASIBLE, t, str(exc))
            break

        rows["t"].append(t); rows["x"].append(x); rows["y"].append(y)
        rows["alpha"].append(pose.alpha); rows["e"].append(e)
        rows["delta"].append(herr); rows["omega_d"].append(ffwd)
        rows["omega"].append(omega); rows["dist"].append(dist)

        if len(crit) and np.min(np.hypot(crit[:, 0] - x, crit[:, 1] - y)) < stop.tol_c:
            event = TerminationEvent(TerminationKind.CRITICAL, t,
                                     "entered the critical-set neighborhood")
            break
        if not (domain.xmin <= x <= domain.xmax and domain.ymin <= y <= domain.ymax):
            event = TerminationEvent(TerminationKind.LEFT_DOMAIN, t,
                                     "left the working region")
            break
        dwell = dwell + dt if (abs(e) < stop.tol_e and dist < stop.tol_d) else 0.0
        if dwell >= stop.t_dwell:
            event = TerminationEvent(
                TerminationKind.CONVERGED, t,
                f"|e| and path distance within tolerance for {stop.t_dwell} s")
            break
        if step == n_steps:
            event = TerminationEvent(TerminationKind.TIMEOUT, t, "t_max reached")
            break
        x, y, a = _rk4_step(x, y, a, u_r, omega, dt)

    return Trajectory(
        dt=dt, termination=event,
        **{k: np.asarray(v, dtype=float) for k, v in rows.items()},
    )


# ---------------------------------------------------------------------------
# Integral curves of the raw and normalized fields


@dataclass
class TraceResult:
    t: np.ndarray
    points: np.ndarray
    e: np.ndarray
    label: TraceLabel
    t_final: float


def _trace_velocity(path, errmap, k_n, pts, mode, u_r, eps):
    ph = path.phi(pts)
    g = path.grad(pts)
    e = errmap.psi(ph)
    v = np.empty_like(g)
    v[..., 0] = g[..., 1] - k_n * e * g[..., 0]
    v[..., 1] = -g[..., 0] - k_n * e * g[..., 1]
    if mode is TraceMode.RAW:
        return v
    vn = np.hypot(v[..., 0], v[..., 1])
    return u_r * v / np.maximum(vn, _TINY)[..., None]


def trace_integral_curve(path, errmap, k_n, start, mode, dt, t_max, u_r=1.0,
                         stop=StopPolicy(), domain=PADDED_WORKSPACE,
                         critical_points=None):
    """Trace one integral curve of the raw field (xi' = v) or normalized
    field (r' = u_r m_d) and label the outcome."""
    starts = np.asarray(start, dtype=float).reshape(1, 2)
    traj_pts, traj_e = [], []

    def record(t, ids, pts, e):
        traj_pts.append(pts[0].copy())
        traj_e.append(float(e[0]))

    labels, t_final = trace_batch(path, errmap, k_n, starts, mode, dt, t_max,
                                  u_r=u_r, stop=stop, domain=domain,
                                  critical_points=critical_points, record=record)
    pts = np.asarray(traj_pts)
    return TraceResult(
        t=np.arange(len(pts)) * dt,
        points=pts,
        e=np.asarray(traj_e),
        label=labels[0],
        t_final=float(t_final[0]),
    )


def trace_batch(path, errmap, k_n, starts, mode, dt, t_max, u_r=1.0,
                stop=StopPolicy(), domain=PADDED_WORKSPACE,
                critical_points=None, record=None):
    """Trace a batch of integral curves; returns (labels, t_final) per run.

    `record`, if given, is called once per step as record(t, ids, pts, e).
    """
    if dt <= 0.0 or t_max <= 0.0:
        raise ValueError("dt and t_max must be positive")
    starts = np.asarray(starts, dtype=float).reshape(-1, 2)
    n_runs = len(starts)
    if n_runs == 0:
        return np.zeros(0, dtype=object), np.zeros(0)
    crit = (np.asarray(critical_points, dtype=float).reshape(-1, 2)
            if critical_points is not None
            else _critical_locations(path, domain))
    eps = 1e-9

    pts = starts.copy()
    ids = np.arange(n_runs)
    dwell = np.zeros(n_runs)
    labels = np.full(n_runs, TraceLabel.TIMEOUT, dtype=object)
    t_fin = np.full(n_runs, float(t_max))

    n_steps = int(math.ceil(t_max / dt - 1e-9))
    for step in range(n_steps + 1):
        t = step * dt
        e = errmap.psi(path.phi(pts))
        if record is not None:
            record(t, ids, pts, e)

        bad = ~np.isfinite(pts).all(axis=1)
        if len(crit):
            d2c = np.min(np.sum((pts[:, None, :] - crit) ** 2, axis=-1), axis=1)
            critical_now = bad | (d2c < stop.tol_c**2)
        else:
            critical_now = bad
        g = path.grad(pts)
        critical_now |= np.hypot(g[..., 0], g[..., 1]) <= eps
        escaped_now = ~domain.contains(pts)

        cand = np.abs(e) < stop.tol_e
        dist = np.full(len(pts), np.inf)
        if cand.any():
            dist[cand] = path.distance_many(pts[cand])
        holds = cand & (dist < stop.tol_d)
        dwell = np.where(holds, dwell + dt, 0.0)
        path_now = dwell >= stop.t_dwell
        timeout_now = np.full(len(pts), step == n_steps)

        done = critical_now | escaped_now | path_now | timeout_now
        if done.any():
            ii = ids[done]
            lab = np.where(
                critical_now[done], TraceLabel.CRITICAL,
                np.where(escaped_now[done], TraceLabel.ESCAPED,
                         np.where(path_now[done], TraceLabel.PATH,
                                  TraceLabel.TIMEOUT)))
            labels[ii] = lab
            t_fin[ii] = t
            keep = ~done
            if not keep.any():
                break
            pts, ids, dwell = pts[keep], ids[keep], dwell[keep]

        k1 = _trace_velocity(path, errmap, k_n, pts, mode, u_r, eps)
        k2 = _trace_velocity(path, errmap, k_n, pts + 0.5 * dt * k1, mode, u_r, eps)
        k3 = _trace_velocity(path, errmap, k_n, pts + 0.5 * dt * k2, mode, u_r, eps)
        k4 = _trace_velocity(path, errmap, k_n, pts + dt * k3, mode, u_r, eps)
        pts = pts + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return labels, t_fin


def lyapunov_series(path, errmap, run):
    """(t, V) pairs with V = e^2 / 2 along a Trajectory or TraceResult."""
    if isinstance(run, Trajectory):
        t, e = run.t, run.e
    elif isinstance(run, TraceResult):
        t, e = run.t, run.e
    else:
        raise TypeError(f"expected Trajectory or TraceResult, got {type(run)}")
    return np.column_stack([t, 0.5 * np.asarray(e) ** 2])
