"""Scenario engine: tick stepping, aiding alignment, reproducibility, sweeps."""
import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from stepnav import svm
from stepnav.errors import ConfigError, FilterDivergenceError
from stepnav.policies import FixedPolicy, SpeedThresholdPolicy
from stepnav.scenario import (ScenarioConfig, SimulatedSource, SweepRow,
                              count_iterations, ground_truth_for, monte_carlo,
                              run_adaptive, run_scenario, select_step,
                              speed_error, sweep_step_sizes)
from stepnav.trajectory import TrajectorySpec

WEAVE = TrajectorySpec(kind="segments", segments=[(2.0, 0.5, 0.0), (2.0, -0.5, 0.0)])
LINE = TrajectorySpec(kind="straight_line")


def _cfg(**over):
    kw = dict(trajectory=WEAVE, duration_s=4.0, dt=0.01, dtau=1.0,
              meas_var=1.6e-5, accel_var=4e-4, gyro_var=4e-6, seed=7)
    kw.update(over)
    return ScenarioConfig(**kw)


def test_count_iterations_single_segment():
    assert count_iterations([(0.0, 240.0, 0.002)]) == 120_000
    assert count_iterations([(0.0, 40.0, 0.04)]) == 1_000


def test_count_iterations_split_timeline():
    """Two equal-duration segments at different steps add their cycle counts."""
    timeline = [(0.0, 20.0, 0.002), (20.0, 40.0, 0.04)]
    assert count_iterations(timeline) == 10_000 + 500


def test_fixed_run_iteration_and_update_counts():
    res = run_scenario(_cfg())
    assert res.metrics.iterations == 400
    assert res.metrics.n_updates == 4
    assert res.metrics.switches == 0
    assert res.timeline == [(0.0, 4000 * 0.001, 0.01)]
    assert count_iterations(res.timeline) == res.metrics.iterations


def test_update_count_survives_misaligned_step():
    """A step that does not divide dtau still gets one update per interval."""
    res = run_scenario(_cfg(dt=0.032))
    assert res.metrics.iterations == 125
    assert res.metrics.n_updates == 4


def test_zero_noise_run_tracks_truth_exactly():
    cfg = _cfg(meas_var=0.0, accel_var=0.0, gyro_var=0.0, base_dt=0.01)
    res = run_scenario(cfg)
    assert res.metrics.mean_speed_error == 0.0
    assert res.metrics.rms_speed_error == 0.0
    assert res.metrics.max_speed_error == 0.0


def test_rerun_is_bit_identical():
    cfg = _cfg()
    r1 = run_scenario(cfg, collect_errors=True)
    r2 = run_scenario(cfg, collect_errors=True)
    assert r1.metrics == r2.metrics
    assert_array_equal(r1.errors, r2.errors)
    # Default policy is a fixed step at cfg.dt.
    r3 = run_scenario(cfg, FixedPolicy(cfg.dt))
    assert r3.metrics == r1.metrics


def test_run_index_changes_the_noise():
    cfg = _cfg()
    a = run_scenario(cfg, run_index=0)
    b = run_scenario(cfg, run_index=1)
    assert a.metrics.mean_speed_error != b.metrics.mean_speed_error


def test_error_series_shape_and_io_logs():
    cfg = _cfg()
    res = run_scenario(cfg, collect_errors=True, collect_io=True)
    assert res.errors.shape == (res.metrics.iterations, 2)
    assert len(res.imu_log) == res.metrics.iterations
    assert len(res.aiding_log) == res.metrics.n_updates
    assert len(res.imu_log[0]) == 10
    assert len(res.aiding_log[0]) == 4
    bare = run_scenario(cfg)
    assert bare.errors is None and bare.imu_log is None


def test_speed_error_examples():
    v = np.arange(12.0).reshape(4, 3)
    assert speed_error(v, v) == 0.0
    assert speed_error(v + [0.1, 0.0, 0.0], v) == pytest.approx(0.1, rel=1e-12)
    est = np.array([[0.3, 0.0, 0.0], [0.0, 0.4, 0.0]])
    assert speed_error(est, np.zeros((2, 3))) == pytest.approx(0.35, rel=1e-12)


def test_fix_values_do_not_depend_on_stepping():
    gt = ground_truth_for(_cfg())
    fine = SimulatedSource(_cfg(dt=0.002), gt)
    coarse = SimulatedSource(_cfg(dt=0.04), gt)
    assert_array_equal(fine.fix_ticks, coarse.fix_ticks)
    assert_array_equal(fine.fix_vals, coarse.fix_vals)


def test_noise_free_fixes_equal_truth():
    cfg = _cfg(meas_var=0.0)
    gt = ground_truth_for(cfg)
    src = SimulatedSource(cfg, gt)
    for j, tick in enumerate(src.fix_ticks):
        assert_array_equal(src.fix_vals[j], gt.vel[tick])
    dvl = SimulatedSource(_cfg(aiding="dvl", meas_var=0.0), gt)
    for j, tick in enumerate(dvl.fix_ticks):
        assert_array_equal(dvl.fix_vals[j], gt.dcm[tick].T @ gt.vel[tick])


def test_noise_free_imu_is_a_passthrough():
    cfg = _cfg(accel_var=0.0, gyro_var=0.0)
    gt = ground_truth_for(cfg)
    src = SimulatedSource(cfg, gt)
    for tick in (0, 17, 3999):
        f, w = src.imu(tick)
        assert_array_equal(f, gt.f_b[tick])
        assert_array_equal(w, gt.w_b[tick])


def test_same_run_index_replays_the_same_samples():
    cfg = _cfg()
    gt = ground_truth_for(cfg)
    a = SimulatedSource(cfg, gt, run_index=0)
    b = SimulatedSource(cfg, gt, run_index=0)
    c = SimulatedSource(cfg, gt, run_index=1)
    far, fbr, fcr = [], [], []
    for tick in range(50):
        far.append(np.hstack([np.copy(x) for x in a.imu(tick)]))
        fbr.append(np.hstack([np.copy(x) for x in b.imu(tick)]))
        fcr.append(np.hstack([np.copy(x) for x in c.imu(tick)]))
    assert_array_equal(np.array(far), np.array(fbr))
    assert np.any(np.array(far) != np.array(fcr))


def test_imu_noise_variance_matches_config():
    """Pooled, normalized sample deviations have unit variance within 5%."""
    cfg = _cfg(trajectory=LINE, duration_s=100.0, base_dt=0.01,
               accel_var=4e-4, gyro_var=4e-6, seed=11)
    gt = ground_truth_for(cfg)
    src = SimulatedSource(cfg, gt)
    sa, sg = math.sqrt(cfg.accel_var), math.sqrt(cfg.gyro_var)
    dev = np.empty((gt.n_ticks, 6))
    for t in range(gt.n_ticks):
        f, w = src.imu(t)
        dev[t, 0:3] = (f - gt.f_b[t]) / sa
        dev[t, 3:6] = (w - gt.w_b[t]) / sg
    flat = dev.ravel()
    assert abs(flat.mean()) < 0.02
    assert abs(flat.var() - 1.0) < 0.05


def test_monte_carlo_single_run_matches_run_scenario():
    cfg = _cfg()
    avg, per_run, _ = monte_carlo(cfg, n=1)
    direct = run_scenario(cfg, run_index=0)
    assert avg == direct.metrics
    assert per_run == [direct.metrics]


def test_monte_carlo_is_jobs_invariant():
    cfg = _cfg(duration_s=1.0)
    avg1, runs1, _ = monte_carlo(cfg, n=4, jobs=1)
    avg2, runs2, _ = monte_carlo(cfg, n=4, jobs=2)
    assert runs1 == runs2
    assert avg1 == avg2


def test_monte_carlo_average_tightens_with_n():
    """Group averages of 16 runs spread about half as much as groups of 4."""
    cfg = _cfg(duration_s=2.0, base_dt=0.01)
    _, per_run, _ = monte_carlo(cfg, n=192)
    vals = np.array([m.mean_speed_error for m in per_run])
    spread4 = vals.reshape(48, 4).mean(axis=1).std()
    spread16 = vals.reshape(12, 16).mean(axis=1).std()
    assert 0.2 < spread16 / spread4 < 0.8


def test_monte_carlo_rejects_bad_n():
    with pytest.raises(ConfigError):
        monte_carlo(_cfg(), n=0)


def test_health_counters_on_a_clean_run():
    res = run_scenario(_cfg(), health=True)
    assert res.health["violations"] == 0
    assert res.health["checks"] == res.metrics.n_updates + 1
    assert res.health["max_ortho_dev"] <= 1e-9


def test_divergent_sensor_raises():
    cfg = _cfg()
    gt = ground_truth_for(cfg)

    class NanGyro(SimulatedSource):
        def imu(self, tick):
            f, _ = super().imu(tick)
            return f, np.full(3, np.nan)

    with pytest.raises(FilterDivergenceError):
        run_scenario(cfg, source=NanGyro(cfg, gt))


def test_threshold_policy_switch_and_timeline():
    """Above-threshold speed flips the initial coarse step to fine once."""
    cfg = _cfg(trajectory=LINE, meas_var=0.0, accel_var=0.0, gyro_var=0.0,
               dt=0.04)
    res = run_scenario(cfg, SpeedThresholdPolicy(0.002, 0.04, 3.0))
    b = cfg.base_dt
    assert res.metrics.switches == 1
    assert res.timeline == [(0 * b, 1000 * b, 0.04), (1000 * b, 4000 * b, 0.002)]
    assert res.metrics.iterations == 25 + 1500
    assert count_iterations(res.timeline) == res.metrics.iterations


def test_tune_cadence_override():
    cfg = _cfg(trajectory=LINE, meas_var=0.0, accel_var=0.0, gyro_var=0.0,
               dt=0.04)
    res = run_scenario(cfg, SpeedThresholdPolicy(0.002, 0.04, 3.0),
                       tune_every_s=0.5)
    # First stride boundary at or past the 0.5 s cadence: 13 * 0.04 = 0.52.
    assert res.timeline[0] == (0.0, 520 * cfg.base_dt, 0.04)


def test_adaptive_needs_aiding_aligned_class_steps():
    cfg = _cfg(dtau=0.05, dt=0.002)
    with pytest.raises(ConfigError):
        run_scenario(cfg, SpeedThresholdPolicy(0.002, 0.04, 3.0))


@pytest.mark.parametrize("step", [0.002, 0.04])
def test_constant_model_equals_fixed_policy(step):
    """A constant classifier with hysteresis off reproduces the fixed run."""
    cfg = _cfg(dt=step)
    fixed = run_scenario(cfg)
    adaptive = run_adaptive(cfg, svm.constant_model(step), hysteresis=0)
    assert adaptive.metrics == fixed.metrics
    assert adaptive.timeline == fixed.timeline


def test_ground_truth_cache_reuses_objects():
    cfg = _cfg()
    assert ground_truth_for(cfg) is ground_truth_for(_cfg(seed=99))
    other = ground_truth_for(_cfg(duration_s=2.0))
    assert other is not ground_truth_for(cfg)


def test_select_step_takes_largest_within_bound():
    rows = [SweepRow(dt, err, err, err, 100) for dt, err in
            [(0.002, 0.02), (0.01, 0.05), (0.04, 0.09), (0.1, 0.12)]]
    assert select_step(rows, 0.1) == (0.04, False)


def test_select_step_flags_unreachable_bound():
    rows = [SweepRow(dt, err, err, err, 100) for dt, err in
            [(0.002, 0.2), (0.04, 0.5)]]
    assert select_step(rows, 0.1) == (0.002, True)


def test_sweep_orders_rows_and_selects():
    cfg = _cfg(duration_s=2.0, dtau=0.5)
    result = sweep_step_sizes(cfg, candidates=(0.05, 0.01), n_mc=2)
    assert [r.dt for r in result.rows] == [0.01, 0.05]
    assert result.n_mc == 2
    sel, flag = select_step(result.rows, cfg.bound_mps)
    assert (result.selected_dt, result.out_of_bound) == (sel, flag)
    assert result.row(0.05).dt == 0.05
    with pytest.raises(KeyError):
        result.row(0.02)


def test_config_roundtrip_through_dict():
    cfg = _cfg(aiding="dvl", meas_var=1.6e-5, accel_bias_rw_var=1e-10,
               gyro_bias_rw_var=1e-12)
    d = cfg.to_dict()
    assert "dvl_vel_var" in d and "accel_bias_rw_var" in d
    assert ScenarioConfig.from_dict(d).to_dict() == d
    plain = _cfg().to_dict()
    assert "gnss_vel_var" in plain and "accel_bias_rw_var" not in plain
    assert ScenarioConfig.from_dict(plain).to_dict() == plain


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        _cfg(aiding="sonar")
    with pytest.raises(ConfigError):
        _cfg(accel_var=-1.0)
    with pytest.raises(ConfigError):
        _cfg(mc_n=0)
    with pytest.raises(ConfigError):
        _cfg(dt=0.0105)  # not on the base grid
    with pytest.raises(ConfigError):
        _cfg(dt=0.04, dtau=0.02)  # aiding faster than stepping
    with pytest.raises(ConfigError):
        _cfg(v0=(1.0, 2.0))


def test_config_from_dict_rejects_surprises():
    good = _cfg().to_dict()
    with pytest.raises(ConfigError, match="unknown config"):
        ScenarioConfig.from_dict({**good, "typo_key": 1})
    with pytest.raises(ConfigError, match="does not match aiding"):
        ScenarioConfig.from_dict({**good, "aiding": "dvl"})
    with pytest.raises(ConfigError, match="trajectory"):
        ScenarioConfig.from_dict({k: v for k, v in good.items()
                                  if k != "trajectory"})
    bad_traj = {**good, "trajectory": {**good["trajectory"], "shape": "oval"}}
    with pytest.raises(ConfigError, match="unknown trajectory"):
        ScenarioConfig.from_dict(bad_traj)
