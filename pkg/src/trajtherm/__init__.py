"""Stochastic thermodynamics of measured open quantum systems.

Trajectory unravelings (jump and diffusive) of small open quantum systems,
with per-trajectory ledgers for work, classical heat, quantum heat, and
stochastic entropy production, plus fluctuation-theorem diagnostics.
"""

from .channels import Dilation, KrausSet, coarse_grain, kraus_from_dilation, reverse_kraus
from .errors import (
    DimensionError,
    DivisionByZeroOutcome,
    EnumerationTooLarge,
    ImpossibleOutcome,
    InvalidState,
    ModelBuildError,
    NotCoarseGrainable,
    ParameterError,
    StepSizeError,
    SupportError,
    TrajthermError,
    UnitarityError,
)
from .scenarios import (
    FluorescenceParams,
    FluorescenceRun,
    MonitorParams,
    MonitoringRun,
    ThermalizationResult,
    build_thermalization,
    enumerate_thermalization,
    fluorescence_fluxes,
    fluorescence_model,
    monitor_model,
    outcome_density,
    run_fluorescence,
    run_monitoring,
)
from .thermo import EnergyLedger, EnsembleSummary
from .trajectories import (
    TrajectoryRecord,
    enumerate_trajectories,
    sample_two_point,
    traj_rng,
    write_csv,
)
from .unravel import LindbladModel, evolve_master, lindblad_rhs, qj_kraus, qsd_step

__version__ = "0.1.0"

__all__ = [
    "Dilation",
    "KrausSet",
    "coarse_grain",
    "kraus_from_dilation",
    "reverse_kraus",
    "TrajthermError",
    "DimensionError",
    "InvalidState",
    "SupportError",
    "ParameterError",
    "UnitarityError",
    "DivisionByZeroOutcome",
    "NotCoarseGrainable",
    "ImpossibleOutcome",
    "EnumerationTooLarge",
    "StepSizeError",
    "ModelBuildError",
    "FluorescenceParams",
    "FluorescenceRun",
    "MonitorParams",
    "MonitoringRun",
    "ThermalizationResult",
    "build_thermalization",
    "enumerate_thermalization",
    "fluorescence_fluxes",
    "fluorescence_model",
    "monitor_model",
    "outcome_density",
    "run_fluorescence",
    "run_monitoring",
    "EnergyLedger",
    "EnsembleSummary",
    "TrajectoryRecord",
    "enumerate_trajectories",
    "sample_two_point",
    "traj_rng",
    "write_csv",
    "LindbladModel",
    "evolve_master",
    "lindblad_rhs",
    "qj_kraus",
    "qsd_step",
    "__version__",
]
