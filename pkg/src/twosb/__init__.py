"""Simulation and digital sideband-rejection compensation of 2SB receivers."""

__version__ = "0.1.0"

from .calibration import (
    CalibrationError,
    CalibrationSet,
    derive_constants,
    measure_x1,
    measure_x2,
    sweep_calibrate,
)
from .compensation import (
    SrrSpectrum,
    WorkingPoint,
    compensate,
    compensated_rejection,
    compensated_rejection_no_hybrid,
    compensated_rejection_with_hybrid,
    recombine,
    srr_from_tone,
    srr_sweep,
)
from .errors import (
    ContourResult,
    ErrorBudget,
    McRejectionSummary,
    TargetUnreachableError,
    coupled_voltage,
    max_dphi_deg,
    monte_carlo_rejection_error,
    propagate_rejection_error,
    ratio_errors,
    tolerance_contour,
    x_interval,
)
from .estimator import NotFittedError, SidebandCompensator
from .receiver import (
    DriftEvent,
    DriftTarget,
    FrequencyPlan,
    GainMatrix,
    ImbalanceProfile,
    Receiver,
    Sideband,
    Topology,
    analog_outputs,
    analog_rejection,
    analog_rejection_db,
    apply_drift,
    build_receiver,
    linear_ramp,
    observe,
)
from .units import CAP_DB, CAP_LINEAR, from_db, is_capped, to_db

__all__ = [
    "CAP_DB",
    "CAP_LINEAR",
    "CalibrationError",
    "CalibrationSet",
    "ContourResult",
    "DriftEvent",
    "DriftTarget",
    "ErrorBudget",
    "FrequencyPlan",
    "GainMatrix",
    "ImbalanceProfile",
    "McRejectionSummary",
    "NotFittedError",
    "Receiver",
    "Sideband",
    "SidebandCompensator",
    "SrrSpectrum",
    "TargetUnreachableError",
    "Topology",
    "WorkingPoint",
    "analog_outputs",
    "analog_rejection",
    "analog_rejection_db",
    "apply_drift",
    "build_receiver",
    "compensate",
    "compensated_rejection",
    "compensated_rejection_no_hybrid",
    "compensated_rejection_with_hybrid",
    "coupled_voltage",
    "derive_constants",
    "from_db",
    "is_capped",
    "linear_ramp",
    "max_dphi_deg",
    "measure_x1",
    "measure_x2",
    "monte_carlo_rejection_error",
    "observe",
    "propagate_rejection_error",
    "recombine",
    "ratio_errors",
    "srr_from_tone",
    "srr_sweep",
    "sweep_calibrate",
    "to_db",
    "tolerance_contour",
    "x_interval",
]
