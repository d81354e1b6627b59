"""Cosmological time and CMC barriers for AdS and dS domains of dependence."""

from types import ModuleType as _ModuleType

from ._accel import backend
from .ads_cosmo_time import (
    RealizingGeodesic,
    cosmological_time,
    cosmological_time_exact,
    level_sample,
    realizing_geodesic,
    reverse_cosmological_time,
)
from .ads_domains import AchronalData, AdsDomain, equatorial_data, f_bounds, horizon_point
from .ads_model import AdsConformalPoint, boundary_to_null, conformal_to_linear, linear_to_conformal
from .curvature_meter import barrier_scan, estimate_mean_curvature, verify_level_bounds
from .ds_domains import (
    DsBoundarySet,
    RoundBall,
    ball_of_point,
    cosmological_time_ds,
    level_sample_ds,
    point_of_ball,
    realizing_geodesic_ds,
    reverse_cosmological_time_ds,
)
from .ds_foliations import (
    FoliationCurve,
    UmbilicalLeaf,
    counterexample_peak,
    counterexample_profile,
    leaf_mean_curvature,
    validate_foliation,
)
from .errors import (
    CosmotimeError,
    DegenerateFiberError,
    DomainError,
    FlowBreakdownError,
    InsufficientDataError,
    InvalidInputError,
    RangeError,
    UniquenessViolationError,
)
from .gauss_flow import ImmersedPatch, almost_fuchsian_check, flow_point, weingarten_evolution
from .pseudo_linalg import AmbientVector, Signature, inner

__version__ = "0.1.0"

__all__ = [k for k, v in dict(globals()).items()
           if not k.startswith("_") and not isinstance(v, _ModuleType)]
