"""posefusion: contracting observer cascade for pose + biased-IMU fusion.

A state-estimation library plus simulation harness.  An attitude observer
fuses gyro readings with orientation measurements while estimating the
gyro bias; its output feeds a translation observer that fuses specific
force with position measurements while estimating the accelerometer bias.
Both observers come with constructive convergence certificates, and the
harness reproduces the certified behavior in simulation.
"""
from .attitude import (
    AttitudeGains,
    AttitudeState,
    attitude_derivative,
    attitude_step,
)
from .config import RunConfig, default_config, load_config
from .gains import (
    ContractionCertificate,
    TranslationGains,
    pole_place,
    synthesize_certificate,
    verify_contraction_lmi,
)
from .harness import RunRecord, run_simulation
from .quat import error_quat, quat_conj, quat_mul, quat_normalize, quat_to_rot, skew
from .sim import TruthState, truth_signals, truth_step
from .translation import AttitudeFeed, TranslationState, translation_derivative, translation_step

__version__ = "0.1.0"

__all__ = [
    "AttitudeFeed",
    "AttitudeGains",
    "AttitudeState",
    "ContractionCertificate",
    "RunConfig",
    "RunRecord",
    "TranslationGains",
    "TranslationState",
    "TruthState",
    "attitude_derivative",
    "attitude_step",
    "default_config",
    "error_quat",
    "load_config",
    "pole_place",
    "quat_conj",
    "quat_mul",
    "quat_normalize",
    "quat_to_rot",
    "run_simulation",
    "skew",
    "synthesize_certificate",
    "translation_derivative",
    "translation_step",
    "truth_signals",
    "truth_step",
    "verify_contraction_lmi",
]
