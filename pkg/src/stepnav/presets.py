"""Canonical scenarios: benchmark courses and tuned noise levels.

Three ready-made configurations cover the main workflows: a GNSS-aided
benchmark for step-size sweeps, a GNSS-aided adaptive scenario with a sharp
maneuvering window bracketed by cruise, and a low-speed DVL-aided scenario
that starts aggressive and settles down. Course geometry and noise levels
are chosen so step size visibly drives the speed error.
"""
from .scenario import CANDIDATE_STEPS, CLASS_STEPS, ScenarioConfig
from .trajectory import TrajectorySpec

#: Default speed thresholds for the baseline policy [m/s].
V_THRESH_GNSS = 5.0
V_THRESH_DVL = 1.0


def benchmark_course():
    """Maneuver-rich course: long hard weave, a speed excursion, then cruise.

    Aggressive enough that integration truncation, not sensor noise, sets
    the speed error at coarse step sizes.
    """
    segments = [(20.0, 0.0, 0.0)]
    for _ in range(15):
        segments += [(4.0, 2.0, 0.0), (4.0, -2.0, 0.0)]
    segments += [
        (10.0, 0.0, 1.0),
        (10.0, 0.0, -1.0),
        (6.0, 0.35, 0.0),
        (40.0, 0.0, 0.0),
        (6.0, -0.35, 0.0),
        (28.0, 0.0, 0.0),
    ]
    return TrajectorySpec(kind="segments", segments=segments)


def adaptive_gnss_course():
    """Cruise with one hard S-turn block and two gentle heading changes."""
    return TrajectorySpec(kind="segments", segments=[
        (50.0, 0.0, 0.0),
        (4.0, 1.2, 0.0), (4.0, -1.2, 0.0),
        (4.0, 1.2, 0.0), (4.0, -1.2, 0.0),
        (4.0, 1.2, 0.0), (4.0, -1.2, 0.0),
        (30.0, 0.0, 0.0),
        (6.0, 0.35, 0.0),
        (40.0, 0.0, 0.0),
        (6.0, -0.35, 0.0),
        (84.0, 0.0, 0.0),
    ])


def dvl_course():
    """Aggressive start, then cruise with two mild corrections (40 s)."""
    return TrajectorySpec(kind="segments", segments=[
        (3.75, 1.0, 0.0), (3.75, -1.0, 0.0),
        (3.75, 1.0, 0.0), (3.75, -1.0, 0.0),
        (5.0, 0.0, 0.0),
        (4.0, 0.39, 0.0),
        (8.0, 0.0, 0.0),
        (4.0, 0.39, 0.0),
        (4.0, 0.0, 0.0),
    ])


def benchmark_gnss(**overrides):
    """GNSS-aided 240 s benchmark used for step-size sweeps."""
    kwargs = dict(
        trajectory=benchmark_course(),
        aiding="gnss",
        meas_var=0.004 ** 2,
        accel_var=0.02 ** 2,
        gyro_var=0.002 ** 2,
        dt=0.01,
        dtau=1.0,
        duration_s=240.0,
        v0=(5.0, 0.0, 0.0),
        p0_deg=(32.0, 34.0, 5.0),
        mc_n=100,
    )
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


def adaptive_gnss(**overrides):
    """GNSS-aided scenario for the learned policy (noisier aiding)."""
    kwargs = dict(
        trajectory=adaptive_gnss_course(),
        aiding="gnss",
        meas_var=0.02,
        accel_var=0.04 ** 2,
        gyro_var=0.003 ** 2,
        dt=0.002,
        dtau=1.0,
        duration_s=240.0,
        v0=(5.0, 0.0, 0.0),
        p0_deg=(32.0, 34.0, 5.0),
    )
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


def adaptive_dvl(**overrides):
    """DVL-aided low-speed scenario for the learned policy."""
    kwargs = dict(
        trajectory=dvl_course(),
        aiding="dvl",
        meas_var=0.004,
        accel_var=0.02 ** 2,
        gyro_var=0.002 ** 2,
        dt=0.002,
        dtau=1.0,
        duration_s=40.0,
        v0=(1.0, 0.0, 0.0),
        p0_deg=(32.0, 34.0, -5.0),
    )
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


PRESETS = {
    "benchmark_gnss": benchmark_gnss,
    "adaptive_gnss": adaptive_gnss,
    "adaptive_dvl": adaptive_dvl,
}


def dataset_trajectories():
    """Trajectory mix for dataset generation: varied maneuver intensity."""
    aggressive = TrajectorySpec(kind="segments", segments=[
        (5.0, 0.0, 0.0),
        (3.0, 1.2, 0.0), (3.0, -1.2, 0.0),
        (3.0, 1.2, 0.0), (3.0, -1.2, 0.0),
        (3.0, 1.2, 0.0), (3.0, -1.2, 0.0),
        (7.0, 0.0, 0.0),
    ])
    weaving = TrajectorySpec(kind="figure8", turn_rate=0.35, half_period_s=10.0)
    gentle = TrajectorySpec(kind="segments", segments=[
        (10.0, 0.0, 0.0), (5.0, 0.2, 0.0), (15.0, 0.0, 0.0),
    ])
    return [("aggressive", aggressive), ("weaving", weaving), ("gentle", gentle)]


__all__ = [
    "CANDIDATE_STEPS", "CLASS_STEPS", "PRESETS",
    "V_THRESH_GNSS", "V_THRESH_DVL",
    "benchmark_course", "adaptive_gnss_course", "dvl_course", "dataset_trajectories",
    "benchmark_gnss", "adaptive_gnss", "adaptive_dvl",
]
