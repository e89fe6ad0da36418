"""First conjugate locus of a base point in a convex 3-d Riemannian
manifold, computed by integrating Jacobi fields along geodesics and
detecting sign changes of the area scalar; the quadraxial ellipsoid is the
built-in, fully verified case study."""

from .config import PAPER_BASE_POINT, PAPER_SEMI_AXES, RunConfig, parse_config
from .conjugate import (
    ConjugateRecord,
    KIND_GENERIC,
    KIND_NEAR_UMBILIC,
    KIND_UMBILIC,
    analyze,
    find_conjugate_times,
    oracle_conjugate_times,
    verify_identities,
)
from .errors import (
    ChartSingularError,
    ConfigError,
    ConjLocusError,
    DomainError,
    FrameError,
    HorizonTooShort,
    IntegrationError,
    UmbilicAmbiguity,
)
from .geodesic import LaunchSpec, Trajectory, integrate, orthonormal_frame_at
from .locus import (
    PolyLine,
    RidgeNetwork,
    RidgePoint,
    SheetMesh,
    SweepResult,
    TangentSphereFrame,
    analyze_direction,
    assemble_ribs,
    chain_points,
    distance_spheres,
    find_ridges,
    find_umbilic_directions,
    jacobi_coordinate_line,
    ridge_network,
    sheet_line_element_check,
    sweep,
    sweep_with_pole_retry,
    trace_line_family,
)
from .manifold import CurvaturePack, EllipsoidChart, chart_transition, pick_chart
from .verify import Verifier

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
