"""Satellite attitude simulation with PID and ANFIS controllers."""

from ._core import (
    AdcsError,
    AnfisModel,
    Config,
    ConfigError,
    DimensionError,
    DivergedError,
    DomainError,
    EstimateInvalidError,
    MissingArtifactError,
    ParseError,
    PidGains,
    PwpfModulator,
    RoleBundle,
    VersionError,
    default_config,
    default_initial_gains,
    euler_to_quat,
    evaluate,
    generate_data,
    grid_partition_init,
    julian_date,
    load_bundle,
    load_config,
    load_gains,
    load_model,
    monte_carlo,
    quat_to_dcm,
    quat_to_euler,
    save_bundle,
    save_gains,
    save_model,
    simulate,
    sun_direction,
    train_anfis,
    train_role,
    tune_pid,
)

__version__ = "0.1.0"
