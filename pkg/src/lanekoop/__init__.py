"""Koopman/EDMD lane-change modeling with truncated-SVD rank analysis."""

__version__ = "0.1.0"

from .lane_change import (
    LaneConfig,
    LongState,
    LaneGeometry,
    Trajectory,
    generate_dataset,
    generate_trajectory,
)
from .observables import (
    MonomialBasis,
    ThinPlateRadialBasis,
    retrieve_state,
    sample_radial_centers,
)
from .edmd import (
    SnapshotPair,
    SvdFactors,
    EnergyRule,
    HardThresholdRule,
    FixedRule,
    FullRule,
    IdentifiedModel,
    TruncatedEDMD,
    build_snapshots,
    svd_thin,
    full_system_matrix,
    truncated_system_matrix,
    select_rank,
    energy_profile,
)
from .evaluation import (
    frobenius_norm,
    reconstruction_error,
    relative_time,
    benchmark_solve,
    one_step_rmse,
)
from .config import ExperimentConfig, ConfigError, load_config, default_config

__all__ = [
    "LaneConfig",
    "LongState",
    "LaneGeometry",
    "Trajectory",
    "generate_dataset",
    "generate_trajectory",
    "MonomialBasis",
    "ThinPlateRadialBasis",
    "retrieve_state",
    "sample_radial_centers",
    "SnapshotPair",
    "SvdFactors",
    "EnergyRule",
    "HardThresholdRule",
    "FixedRule",
    "FullRule",
    "IdentifiedModel",
    "TruncatedEDMD",
    "build_snapshots",
    "svd_thin",
    "full_system_matrix",
    "truncated_system_matrix",
    "select_rank",
    "energy_profile",
    "frobenius_norm",
    "reconstruction_error",
    "relative_time",
    "benchmark_solve",
    "one_step_rmse",
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "default_config",
]
