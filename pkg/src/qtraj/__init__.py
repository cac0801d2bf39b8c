"""Finite-time-step measurement maps for diffusive quantum trajectories."""

from .kernels import BACKEND
from .maps import (
    ALL_KINDS,
    BinnedRecord,
    DegenerateRecordError,
    MapBuilder,
    MapKind,
    MeasurementSetup,
    apply_pure_map,
    build_map,
    completeness_residual,
)
from .metrics import ErrorSummary, ensemble_reduce, fit_scaling, trae_pure, trse_pure
from .presets import EXAMPLE_IDS, example_setup
from .records import FineRecordSegment, RngStream, bin_record, read_records, write_records
from .trajectory import (
    ProtocolConfig,
    TrajectoryRun,
    fully_conditioned_oracle,
    run_ensemble,
    run_trajectory,
    single_bin_errors,
    step_true,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_KINDS",
    "BACKEND",
    "BinnedRecord",
    "DegenerateRecordError",
    "EXAMPLE_IDS",
    "ErrorSummary",
    "FineRecordSegment",
    "MapBuilder",
    "MapKind",
    "MeasurementSetup",
    "ProtocolConfig",
    "RngStream",
    "TrajectoryRun",
    "apply_pure_map",
    "bin_record",
    "build_map",
    "completeness_residual",
    "ensemble_reduce",
    "example_setup",
    "fit_scaling",
    "fully_conditioned_oracle",
    "read_records",
    "run_ensemble",
    "run_trajectory",
    "single_bin_errors",
    "step_true",
    "trae_pure",
    "trse_pure",
    "write_records",
]
