"""Guiding-vector-field path following for constant-speed unicycles.

Implicit planar paths, the guiding field and its steering law, LOS/NGL
baseline controllers, a deterministic RK4 simulator with termination events,
and the critical-point / invariant-set analysis toolbox.
"""

from .analysis import (
    Classification,
    CriticalPoint,
    CriticalPointSearch,
    InvariantSetSpec,
    ViabilityReport,
    classify_critical_point,
    critical_error_threshold,
    find_critical_points,
    in_invariant_set,
    invariant_set_spec,
    viability_check,
)
from .controllers import (
    AmbiguousProjectionError,
    ControlSample,
    Direction,
    GuidanceInfeasibleError,
    LosParams,
    NglParams,
    Projection,
    gvf_control,
    los_control,
    ngl_control,
    project_to_path,
)
from .field import (
    DegeneracyError,
    GvfParams,
    GvfSample,
    guiding_field,
    heading_error,
    rotation_rate,
)
from .paths import (
    ArctanPower,
    CassiniPath,
    CirclePath,
    ContourNotFoundError,
    EllipsePath,
    ErrorMap,
    FieldSample,
    IdentityMap,
    LinePath,
    PathError,
    PolynomialPath,
    RationalSignPower,
    check_derivatives,
    distance_to_path,
    eval_error,
    eval_path,
    make_error_map,
    make_path,
)
from .sim import (
    Pose,
    StopPolicy,
    TerminationEvent,
    TerminationKind,
    TraceLabel,
    TraceMode,
    TraceResult,
    Trajectory,
    lyapunov_series,
    simulate,
    simulate_gvf_batch,
    step_unicycle,
    trace_batch,
    trace_integral_curve,
)
from .util import PADDED_WORKSPACE, WORKSPACE, Region, wrap_angle

__version__ = "0.1.0"
