"""Value types shared by every service.

Each type lives in its own module; the package re-exports them.
"""

from .bessel_accuracy import BesselAccuracy
from .boundary_data import BoundaryData, BoundaryKind
from .channel_params import (
    BoundaryOffset,
    ChannelParams,
    SourceOffset,
    check_offsets,
    drift_split,
    params_new,
)
from .errors import (
    DomainError,
    FapChannelError,
    GridError,
    ParameterError,
    QuadratureError,
    SolverError,
)
from .grid import FarField, GridConfig, ScalarField2D
from .histogram import Histogram
from .hit_record import HitBatch, HitRecord, HitStatus, SimConfig
from .quadrature_config import QuadratureConfig
from .validation_report import ValidationReport

__all__ = [
    "BesselAccuracy",
    "BoundaryData",
    "BoundaryKind",
    "BoundaryOffset",
    "ChannelParams",
    "SourceOffset",
    "check_offsets",
    "drift_split",
    "params_new",
    "DomainError",
    "FapChannelError",
    "GridError",
    "ParameterError",
    "QuadratureError",
    "SolverError",
    "FarField",
    "GridConfig",
    "ScalarField2D",
    "Histogram",
    "HitBatch",
    "HitRecord",
    "HitStatus",
    "SimConfig",
    "QuadratureConfig",
    "ValidationReport",
]
