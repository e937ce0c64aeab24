"""Thin liquid films flowing down wavy inclined walls.

Depth-integrated two-field model (film thickness F, flow rate Q) in
curvilinear coordinates aligned with the bottom contour, with an inertia
regularization variant, stationary and transient solvers, linear stability
tools and velocity-field reconstruction.
"""

__version__ = "0.1.0"

from .backend import BACKEND, USE_NUMBA
from .errors import (
    ConfigError,
    FilmRuptureError,
    RegularizationPoleError,
    SolverError,
    WavyFilmError,
)
from .grid import PeriodicGrid, diff
from .geometry import BottomSpec, GeometryField, curvature_exact, expand_geometry, trig_factors
from .params import DimensionalFluidSpec, Params, nondimensionalize
from .model import (
    MODELS,
    RhsSplit,
    StateFields,
    mass_functional,
    residual_split,
    rhs,
    rhs_rwribl,
    rhs_wribl,
    uniform_state,
)
from .jacobian import assemble_jacobian, stationary_system
from .benney import (
    BenneyExpansion,
    benney_evolution_rhs,
    consistency_residual,
    consistency_scan,
    profile_eval,
    q_expansion,
)
from .solvers import (
    StationarySolution,
    StepControl,
    TimeSeries,
    inject_perturbation,
    integrate,
    solve_stationary,
)
from .analysis import (
    ClassifyOptions,
    CriticalReynoldsPoint,
    PatternMetrics,
    PerturbationConfig,
    StabilityVerdict,
    classify_stability,
    critical_reynolds,
    critical_reynolds_sweep,
    dispersion_critical_reynolds,
    flat_dispersion,
    pattern_metrics,
)
from .reconstruction import (
    FlowField,
    SurfaceCurve,
    eddy_diagnostic,
    from_cartesian,
    reconstruct_field,
    streamlines,
    surface_curve,
    to_cartesian,
    vertical_thickness,
)
from .config import (
    EXPERIMENTS,
    RunConfig,
    SolverSettings,
    TimeSettings,
    load_config,
    parse_config,
)
from .runio import RunWriter, load_manifest, read_csv, resolve_out_dir, write_csv
