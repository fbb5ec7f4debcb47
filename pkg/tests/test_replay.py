"""Log export and replay: bit-exact round trips and parse diagnostics."""
from dataclasses import replace

import pytest
from numpy.testing import assert_array_equal

from stepnav.errors import ConfigError, LogParseError
from stepnav.replay import AIDING_HEADERS, IMU_HEADER, export_log, replay_log
from stepnav.scenario import ScenarioConfig, run_scenario
from stepnav.trajectory import TrajectorySpec

WEAVE = TrajectorySpec(kind="segments", segments=[(2.0, 0.5, 0.0), (2.0, -0.5, 0.0)])


def _cfg(**over):
    kw = dict(trajectory=WEAVE, duration_s=4.0, dt=0.01, dtau=1.0,
              meas_var=1.6e-5, accel_var=4e-4, gyro_var=4e-6, seed=7)
    kw.update(over)
    return ScenarioConfig(**kw)


def _export(tmp_path, cfg):
    res = run_scenario(cfg, collect_io=True, collect_errors=True)
    imu = tmp_path / "imu.csv"
    aiding = tmp_path / "aiding.csv"
    export_log(res, cfg, imu, aiding)
    return res, imu, aiding


def test_replay_reproduces_the_run_bit_for_bit(tmp_path):
    cfg = _cfg()
    res, imu, aiding = _export(tmp_path, cfg)
    rep = replay_log(cfg, imu, aiding, collect_errors=True)
    assert rep.metrics == res.metrics
    assert_array_equal(rep.errors, res.errors)


def test_dvl_replay_round_trip(tmp_path):
    cfg = _cfg(aiding="dvl")
    res, imu, aiding = _export(tmp_path, cfg)
    header = aiding.read_text().splitlines()[0]
    assert header == ",".join(AIDING_HEADERS["dvl"])
    rep = replay_log(cfg, imu, aiding)
    assert rep.metrics == res.metrics


def test_replay_can_stride_coarser_than_the_log(tmp_path):
    cfg = _cfg()
    res, imu, aiding = _export(tmp_path, cfg)
    rep = replay_log(replace(cfg, dt=0.02), imu, aiding)
    assert rep.metrics.iterations == res.metrics.iterations // 2
    assert rep.metrics.n_updates == res.metrics.n_updates


def test_replay_rejects_off_grid_step(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    with pytest.raises(ConfigError, match="multiple of the logged cadence"):
        replay_log(replace(cfg, dt=0.015), imu, aiding)


def test_replay_rejects_duration_mismatch(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    with pytest.raises(ConfigError, match="duration"):
        replay_log(replace(cfg, duration_s=3.0), imu, aiding)


def test_export_requires_collected_io(tmp_path):
    cfg = _cfg()
    res = run_scenario(cfg)
    with pytest.raises(ConfigError, match="collect_io"):
        export_log(res, cfg, tmp_path / "imu.csv", tmp_path / "aiding.csv")


def test_short_row_error_carries_its_line_number(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    lines = imu.read_text().splitlines()
    lines[5] = lines[5].rsplit(",", 1)[0]
    imu.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogParseError, match="line 6: expected 10 columns") as exc:
        replay_log(cfg, imu, aiding)
    assert exc.value.line == 6


def test_non_numeric_cell_error_carries_its_line_number(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    lines = aiding.read_text().splitlines()
    lines[2] = lines[2].replace(lines[2].split(",")[1], "fast", 1)
    aiding.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogParseError, match="line 3") as exc:
        replay_log(cfg, imu, aiding)
    assert exc.value.line == 3


def test_missing_aiding_column_is_a_header_error(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    lines = aiding.read_text().splitlines()
    lines[0] = "t_s,vn,ve"
    aiding.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogParseError, match="line 1: unexpected header"):
        replay_log(cfg, imu, aiding)


def test_imu_header_is_checked(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    lines = imu.read_text().splitlines()
    assert lines[0] == ",".join(IMU_HEADER)
    lines[0] = lines[0].replace("fx", "ax")
    imu.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogParseError, match="line 1"):
        replay_log(cfg, imu, aiding)


def test_irregular_imu_times_are_rejected(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    lines = imu.read_text().splitlines()
    parts = lines[3].split(",")
    parts[0] = repr(float(parts[0]) + 0.003)
    lines[3] = ",".join(parts)
    imu.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogParseError, match="uniform"):
        replay_log(cfg, imu, aiding)


def test_off_grid_fix_time_is_rejected(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    lines = aiding.read_text().splitlines()
    parts = lines[1].split(",")
    parts[0] = repr(float(parts[0]) + 0.004)
    lines[1] = ",".join(parts)
    aiding.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogParseError, match="grid"):
        replay_log(cfg, imu, aiding)


def test_empty_log_is_rejected(tmp_path):
    cfg = _cfg()
    _, imu, aiding = _export(tmp_path, cfg)
    aiding.write_text(",".join(AIDING_HEADERS["gnss"]) + "\n")
    with pytest.raises(LogParseError, match="no data rows"):
        replay_log(cfg, imu, aiding)
