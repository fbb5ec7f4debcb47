"""Velocity-aided strapdown INS with learned mechanization step control.

A forward-Euler NED mechanization fused with GNSS or DVL velocity through a
12-state error-state Kalman filter; the mechanization step size is either
fixed, swept for a sub-optimal choice under a speed-error bound, or driven
online by a trained classifier over filter and noise features.
"""
from .earth import gravity, principal_radii
from .ekf import (AidingMeasurement, FilterDivergenceError, MeasurementNoiseConfig,
                  ProcessNoiseConfig, build_f_matrix, inject_errors, kalman_gain,
                  measurement_model)
from .errors import (ConfigError, GimbalLockWarning, LogParseError, NavError,
                     SingularLatitudeError)
from .features import FEATURE_NAMES, HistoryBuffer, extract_features
from .policies import FixedPolicy, LearnedPolicy, SpeedThresholdPolicy, baseline_step
from .rotations import dcm_from_euler, euler_from_dcm, orthonormalize
from .scenario import (CANDIDATE_STEPS, CLASS_STEPS, RunMetrics, RunResult,
                       ScenarioConfig, SweepResult, count_iterations, monte_carlo,
                       run_adaptive, run_scenario, speed_error, sweep_step_sizes)
from .strapdown import ImuSample, NavState, propagate_nav
from .svm import SvmModel, load_model, predict, save_model, train_svm
from .trajectory import GroundTruth, TrajectorySpec, generate_trajectory

__version__ = "0.1.0"

__all__ = [
    "AidingMeasurement", "CANDIDATE_STEPS", "CLASS_STEPS", "ConfigError",
    "FEATURE_NAMES", "FilterDivergenceError", "FixedPolicy", "GimbalLockWarning",
    "GroundTruth", "HistoryBuffer", "ImuSample", "LearnedPolicy", "LogParseError",
    "MeasurementNoiseConfig", "NavError", "NavState", "ProcessNoiseConfig",
    "RunMetrics", "RunResult", "ScenarioConfig", "SingularLatitudeError",
    "SpeedThresholdPolicy", "SvmModel", "SweepResult", "TrajectorySpec",
    "baseline_step", "build_f_matrix", "count_iterations", "dcm_from_euler",
    "euler_from_dcm", "extract_features", "generate_trajectory", "gravity",
    "inject_errors", "kalman_gain", "load_model", "measurement_model",
    "monte_carlo", "orthonormalize", "predict", "principal_radii",
    "propagate_nav", "run_adaptive", "run_scenario", "save_model",
    "speed_error", "sweep_step_sizes", "train_svm",
]
