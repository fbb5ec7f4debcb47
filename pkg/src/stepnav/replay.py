"""Log export and replay.

A run exported with ``collect_io`` produces two CSVs: the consumed IMU
samples (with ground-truth velocity at each solution epoch, for error
scoring) and the applied aiding fixes at their nominal times. Replay feeds
those files back through the same engine; at the original step size the
arithmetic is identical sample for sample, and larger steps stride over
the logged grid (sample-and-hold downsampling).
"""
import csv
import math

import numpy as np

from .errors import ConfigError, LogParseError
from .scenario import run_scenario
from .trajectory import initial_nav_state

IMU_HEADER = ("t_s", "fx", "fy", "fz", "wx", "wy", "wz", "gt_vn", "gt_ve", "gt_vd")
AIDING_HEADERS = {
    "gnss": ("t_s", "vn", "ve", "vd"),
    "dvl": ("t_s", "vx", "vy", "vz"),
}

#: Grid alignment tolerance when mapping logged times to ticks [s].
TIME_TOL = 1e-9


def export_log(result, cfg, imu_path, aiding_path):
    """Write the collected IO of a run to the two replay CSVs."""
    from .fileio import write_csv

    if result.imu_log is None or result.aiding_log is None:
        raise ConfigError("run was not made with collect_io=True")
    write_csv(imu_path, IMU_HEADER, result.imu_log)
    write_csv(aiding_path, AIDING_HEADERS[cfg.aiding], result.aiding_log)


def _parse_rows(path, n_cols, expect_header):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if lineno == 1:
                if tuple(rec) != tuple(expect_header):
                    raise LogParseError(f"unexpected header {rec!r}", line=1)
                continue
            if len(rec) != n_cols:
                raise LogParseError(f"expected {n_cols} columns, got {len(rec)}", line=lineno)
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise LogParseError(str(exc), line=lineno) from None
    if not rows:
        raise LogParseError(f"{path} has no data rows")
    return np.asarray(rows)


class ReplaySource:
    """Engine measurement source backed by exported log files.

    The logged IMU cadence becomes the replay's fine grid; mechanization
    strides over it. Fix times must land on that grid.
    """

    def __init__(self, cfg, imu_path, aiding_path):
        imu = _parse_rows(imu_path, len(IMU_HEADER), IMU_HEADER)
        aiding = _parse_rows(aiding_path, 4, AIDING_HEADERS[cfg.aiding])

        t = imu[:, 0]
        if t.shape[0] < 2:
            raise LogParseError("need at least two IMU rows to infer the cadence")
        base = t[1] - t[0]
        if base <= 0 or np.any(np.abs(np.diff(t) - base) > TIME_TOL):
            raise LogParseError("IMU log times are not a uniform grid")
        if abs(t[0]) > TIME_TOL:
            raise LogParseError("IMU log must start at t = 0")
        self.base_dt = float(base)
        self.total_ticks = imu.shape[0]
        self._f = np.ascontiguousarray(imu[:, 1:4])
        self._w = np.ascontiguousarray(imu[:, 4:7])
        gt_vel = np.empty((self.total_ticks + 1, 3))
        gt_vel[0] = cfg.v0
        gt_vel[1:] = imu[:, 7:10]
        self.gt_vel = gt_vel
        self.initial_state = initial_nav_state(np.asarray(cfg.v0), cfg.p0_rad)

        ticks = np.rint(aiding[:, 0] / base).astype(int)
        if np.any(np.abs(ticks * base - aiding[:, 0]) > TIME_TOL):
            raise LogParseError("aiding fix times do not land on the IMU grid")
        if np.any(np.diff(ticks) <= 0) or ticks[0] < 1:
            raise LogParseError("aiding fix times must be increasing and positive")
        self.fix_ticks = ticks
        self.fix_vals = np.ascontiguousarray(aiding[:, 1:4])

    def imu(self, tick):
        return self._f[tick], self._w[tick]


def replay_log(cfg, imu_path, aiding_path, policy=None, **kwargs):
    """Re-run the filter over exported logs under any step policy.

    ``cfg`` must describe the original scenario (noise levels, aiding kind,
    dtau); ``cfg.dt`` or the policy picks the replay step, which must be a
    multiple of the logged cadence.
    """
    source = ReplaySource(cfg, imu_path, aiding_path)
    dt_ratio = cfg.dt / source.base_dt
    if abs(dt_ratio - round(dt_ratio)) > 1e-9 or dt_ratio < 1:
        raise ConfigError(
            f"replay step {cfg.dt} is not a multiple of the logged cadence {source.base_dt}")
    if not math.isclose(cfg.duration_s, source.total_ticks * source.base_dt,
                        rel_tol=0, abs_tol=1e-6):
        raise ConfigError("config duration does not match the log length")
    return run_scenario(cfg, policy, source=source, **kwargs)
