"""12-state error-state Kalman filter for velocity-aided inertial navigation.

Error state ordering: [dv_ned (0:3), misalignment (3:6), accel bias residual
(6:9), gyro bias residual (9:12)]. The filter estimates errors of the running
navigation solution from velocity aiding (GNSS in NED axes or DVL in body
axes), and the estimated errors are fed back (closed loop) after every update.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import earth
from .errors import FilterDivergenceError, LargeErrorAngleWarning
from .rotations import orthonormalize, skew
from .strapdown import NavState, position_rate

#: Number of error states.
N_STATES = 12
#: Condition-number guard for the innovation matrix.
COND_LIMIT = 1e12
#: Floor applied to the measurement noise diagonal [m^2/s^2].
R_FLOOR = 1e-12
#: Misalignment norm above which the small-angle correction is suspect [rad].
LARGE_ANGLE = 0.5

#: Frame tag: aiding velocity resolved in NED axes.
FRAME_GNSS_NAV = "gnss_nav"
#: Frame tag: aiding velocity resolved in body axes (DVL mounted at identity).
FRAME_DVL_BODY = "dvl_body"


@dataclass
class ProcessNoiseConfig:
    """Continuous-time process noise variances, one value per sensor triad."""

    accel_var: float
    gyro_var: float
    accel_bias_rw_var: float = 0.0
    gyro_bias_rw_var: float = 0.0

    def __post_init__(self):
        for name in ("accel_var", "gyro_var", "accel_bias_rw_var", "gyro_bias_rw_var"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def qc_diag(self):
        """Diagonal of Q^c ordered [accel x3, gyro x3, accel RW x3, gyro RW x3]."""
        return np.repeat([self.accel_var, self.gyro_var,
                          self.accel_bias_rw_var, self.gyro_bias_rw_var], 3)


@dataclass
class MeasurementNoiseConfig:
    """Aiding velocity noise variances, per NED/body axis [m^2/s^2]."""

    vel_var: tuple

    def __post_init__(self):
        var = np.atleast_1d(np.asarray(self.vel_var, dtype=float))
        if var.size == 1:
            var = np.repeat(var, 3)
        if var.shape != (3,):
            raise ValueError("vel_var must be a scalar or length-3 sequence")
        if np.any(var < 0):
            raise ValueError("vel_var must be >= 0")
        self.vel_var = tuple(var)

    def rd_diag(self):
        """Diagonal of R^d, floored to keep the innovation matrix invertible."""
        return np.maximum(np.asarray(self.vel_var), R_FLOOR)


@dataclass
class AidingMeasurement:
    """One aiding velocity fix with its frame tag."""

    vel: np.ndarray
    frame: str


def symmetrize(p):
    """Return the symmetric part (P + P^T) / 2."""
    return 0.5 * (p + p.T)


def build_f_matrix(state, f_n):
    """Continuous-time error dynamics matrix F (12 x 12).

    Parameters
    ----------
    state : NavState
        Current navigation solution.
    f_n : array_like, shape (3,)
        Bias-corrected specific force rotated into NED axes.
    """
    lat, alt = state.lat, state.alt
    vn, vd = float(state.vel[0]), float(state.vel[2])
    rm, rn = earth.principal_radii(lat)
    re = math.sqrt(rm * rn)
    tl = math.tan(lat)
    sl, cl = math.sin(lat), math.cos(lat)

    p_dot = position_rate(lat, alt, state.vel)
    lat_dot, lon_dot = p_dot[0], p_dot[1]
    w_n = (lon_dot + earth.RATE) * cl
    w_e = -lat_dot
    w_d = -(lon_dot + earth.RATE) * sl

    f = np.zeros((N_STATES, N_STATES))

    # Velocity error wrt velocity error: Coriolis and transport coupling.
    f[0:3, 0:3] = np.array([
        [vd / re, 2 * w_d, -vn / re],
        [-(w_d - earth.RATE * sl), (vd + vn * tl) / re, w_n + earth.RATE * cl],
        [2 * vn / re, -2 * w_n, 0.0],
    ])
    # Velocity error wrt misalignment: gravity/specific-force coupling.
    f[0:3, 3:6] = -skew(f_n)
    # Misalignment wrt velocity error: transport-rate sensitivity.
    f[3:6, 0:3] = np.array([
        [0.0, -1.0 / (rn + alt), 0.0],
        [1.0 / (rm + alt), 0.0, 0.0],
        [0.0, tl / (rn + alt), 0.0],
    ])
    # Misalignment wrt misalignment: rotation by the nav-frame rate.
    f[3:6, 3:6] = -skew((w_n, w_e, w_d))
    # Bias residuals couple through the body-to-NED rotation.
    f[0:3, 6:9] = state.dcm
    f[3:6, 9:12] = state.dcm
    return f


def build_g_matrix(dcm):
    """Noise shaping matrix G = blkdiag(T, T, I, I)."""
    g = np.zeros((N_STATES, N_STATES))
    g[0:3, 0:3] = dcm
    g[3:6, 3:6] = dcm
    g[6:9, 6:9] = np.eye(3)
    g[9:12, 9:12] = np.eye(3)
    return g


def transition_matrix(f, dt):
    """First-order discrete transition Phi = I + F dt."""
    return np.eye(N_STATES) + f * dt


def discrete_process_noise(g, qc_diag, dt):
    """Discrete process noise Q^d = G Q^c G^T dt."""
    return (g * qc_diag) @ g.T * dt


def init_filter(qd):
    """Initial error estimate (zero) and covariance P0 = Q^d."""
    return np.zeros(N_STATES), qd.copy()


def predict_covariance(p, phi, qd):
    """Propagate covariance one step, symmetrized."""
    return symmetrize(phi @ p @ phi.T + qd)


def _inv3(s):
    """Closed-form 3x3 inverse via the adjugate, with a condition guard."""
    a, b, c = s[0]
    d, e, f = s[1]
    g, h, i = s[2]
    co_a = e * i - f * h
    co_b = f * g - d * i
    co_c = d * h - e * g
    det = a * co_a + b * co_b + c * co_c
    if det == 0.0 or not math.isfinite(det):
        raise FilterDivergenceError("innovation matrix is singular")
    inv = np.array([
        [co_a, c * h - b * i, b * f - c * e],
        [co_b, a * i - c * g, c * d - a * f],
        [co_c, b * g - a * h, a * e - b * d],
    ]) / det
    norm1 = np.max(np.sum(np.abs(s), axis=0))
    inv_norm1 = np.max(np.sum(np.abs(inv), axis=0))
    if norm1 * inv_norm1 > COND_LIMIT:
        raise FilterDivergenceError(
            f"innovation matrix condition {norm1 * inv_norm1:.3e} exceeds {COND_LIMIT:.0e}")
    return inv


def kalman_gain(p, h, rd_diag):
    """K = P H^T (H P H^T + R^d)^(-1) for a 3-row measurement."""
    pht = p @ h.T
    s = h @ pht
    s[0, 0] += rd_diag[0]
    s[1, 1] += rd_diag[1]
    s[2, 2] += rd_diag[2]
    return pht @ _inv3(s)


def measurement_model(state, meas):
    """Measurement matrix H and innovation (estimated minus measured velocity).

    GNSS aiding compares NED velocities directly; DVL aiding compares body-axis
    velocities, which adds sensitivity to the misalignment through the skew of
    the current velocity estimate.
    """
    h = np.zeros((3, N_STATES))
    if meas.frame == FRAME_GNSS_NAV:
        h[0:3, 0:3] = np.eye(3)
        dz = state.vel - np.asarray(meas.vel, dtype=float)
    elif meas.frame == FRAME_DVL_BODY:
        t_nb = state.dcm.T
        h[0:3, 0:3] = t_nb
        h[0:3, 3:6] = -t_nb @ skew(state.vel)
        dz = t_nb @ state.vel - np.asarray(meas.vel, dtype=float)
    else:
        raise ValueError(f"unknown aiding frame tag {meas.frame!r}")
    return h, dz


def apply_update(p, k, h, dz, rd_diag=None, joseph=False):
    """Measurement update: error estimate K dz and the updated covariance.

    The error estimate prior is zero every cycle (errors are fed back and
    reset after each update). Default covariance form is (I - K H) P;
    the Joseph form is available behind the flag.
    """
    dx = k @ dz
    ikh = np.eye(N_STATES) - k @ h
    if joseph:
        p_new = ikh @ p @ ikh.T + (k * rd_diag) @ k.T
    else:
        p_new = ikh @ p
    return dx, symmetrize(p_new)


def inject_errors(state, dx):
    """Feed the estimated errors back into the navigation solution.

    Velocity: v <- v - dv. Attitude: T <- (I - [eps x]) T, re-orthonormalized;
    this is the correction consistent with the F-matrix sign conventions.
    Bias residuals are added onto the running bias estimates.
    """
    dv = dx[0:3]
    eps = dx[3:6]
    ang = float(np.linalg.norm(eps))
    if ang > LARGE_ANGLE:
        warnings.warn(f"misalignment correction {ang:.3f} rad exceeds small-angle range",
                      LargeErrorAngleWarning)
    dcm = orthonormalize((np.eye(3) - skew(eps)) @ state.dcm)
    return NavState(
        lat=state.lat,
        lon=state.lon,
        alt=state.alt,
        vel=state.vel - dv,
        dcm=dcm,
        accel_bias=state.accel_bias + dx[6:9],
        gyro_bias=state.gyro_bias + dx[9:12],
    )
