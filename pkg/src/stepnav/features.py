"""Feature extraction for step-size classification.

Sixteen features per window: ten "high-level" features (sensor noise
magnitudes, aiding interval, and 50-sample moving averages of squared
navigation-solution components) and six "low-level" composites of the same
quantities. Moving-average windows fill at the mechanization cadence, one
sample per navigation solution.
"""
import math
from dataclasses import dataclass

import numpy as np

from .rotations import euler_from_dcm

#: Moving-average window length [samples].
WINDOW = 50
#: Variance floor used when inverting near-zero noise variances.
VAR_FLOOR = 1e-12

#: Total feature count and the CSV column names, in order.
N_FEATURES = 16
FEATURE_NAMES = tuple(f"x_hi_{i}" for i in range(1, 11)) + tuple(f"x_lo_{i}" for i in range(1, 7))


@dataclass
class Features:
    """One extracted feature vector with data-quality flags."""

    values: np.ndarray
    warmup: bool
    floored: bool


class HistoryBuffer:
    """Ring buffer of squared navigation-solution components.

    Each pushed sample stores (v_N^2, v_E^2, v_D^2, roll^2, pitch^2, yaw^2);
    ``means`` averages over the filled part of the window.
    """

    def __init__(self, size=WINDOW):
        self._buf = np.zeros((size, 6))
        self._idx = 0
        self._count = 0
        self.speed = 0.0

    def push_state(self, vel, dcm):
        roll, pitch, yaw = euler_from_dcm(dcm)
        vn, ve, vd = vel
        row = self._buf[self._idx]
        row[0] = vn * vn
        row[1] = ve * ve
        row[2] = vd * vd
        row[3] = roll * roll
        row[4] = pitch * pitch
        row[5] = yaw * yaw
        self._idx = (self._idx + 1) % self._buf.shape[0]
        if self._count < self._buf.shape[0]:
            self._count += 1
        self.speed = math.sqrt(vn * vn + ve * ve + vd * vd)

    @property
    def full(self):
        return self._count == self._buf.shape[0]

    @property
    def count(self):
        return self._count

    def means(self):
        if self._count == 0:
            return np.zeros(6)
        if self._count < self._buf.shape[0]:
            return self._buf[: self._count].mean(axis=0)
        return self._buf.mean(axis=0)


def extract_features(accel_var, gyro_var, meas_var, dtau, buffer):
    """Build the 16-element feature vector for the current window.

    Parameters
    ----------
    accel_var, gyro_var : float
        IMU noise variances (first diagonal entries).
    meas_var : float
        Aiding velocity noise variance (first diagonal entry).
    dtau : float
        Aiding interval [s].
    buffer : HistoryBuffer
        Navigation-solution history; may be partially filled (flagged).
    """
    ma = buffer.means()
    sq_g = math.sqrt(gyro_var)
    sq_a = math.sqrt(accel_var)
    sq_r = math.sqrt(meas_var)

    floored = gyro_var < VAR_FLOOR or accel_var < VAR_FLOOR or meas_var < VAR_FLOOR
    gv = max(gyro_var, VAR_FLOOR)
    av = max(accel_var, VAR_FLOOR)
    rv = max(meas_var, VAR_FLOOR)

    speed = buffer.speed
    x3 = (math.sqrt(gv) + math.sqrt(av)) / math.sqrt(rv)
    values = np.array([
        sq_g, sq_a, sq_r, dtau,
        ma[0], ma[1], ma[2], ma[3], ma[4], ma[5],
        math.sqrt(gyro_var + accel_var + meas_var),
        math.sqrt(1.0 / gv + 1.0 / av + 1.0 / rv),
        x3,
        meas_var * dtau,
        speed,
        x3 * speed,
    ])
    return Features(values=values, warmup=not buffer.full, floored=floored)
