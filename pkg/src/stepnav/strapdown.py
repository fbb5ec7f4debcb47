"""Strapdown mechanization in the local-level NED frame.

State: geodetic position (lat, lon, alt), NED velocity, body-to-NED DCM and
running accelerometer/gyro bias estimates. Integration is forward Euler with
symmetric re-orthonormalization of the DCM each step.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import earth
from .errors import SingularLatitudeError
from .rotations import orthonormalize, skew


@dataclass(slots=True)
class ImuSample:
    """One IMU measurement: specific force [m/s^2] and angular rate [rad/s]."""

    f_b: np.ndarray
    w_b: np.ndarray


@dataclass(slots=True)
class NavState:
    """Navigation state at one instant."""

    lat: float
    lon: float
    alt: float
    vel: np.ndarray
    dcm: np.ndarray
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self):
        return NavState(self.lat, self.lon, self.alt, self.vel.copy(), self.dcm.copy(),
                        self.accel_bias.copy(), self.gyro_bias.copy())


def position_rate(lat, alt, vel_ned):
    """Geodetic position rates [lat_dot, lon_dot, alt_dot].

    Raises
    ------
    SingularLatitudeError
        At a pole with nonzero east velocity (lon rate divides by cos(lat)).
    """
    rm, rn = earth.principal_radii(lat)
    vn, ve, vd = float(vel_ned[0]), float(vel_ned[1]), float(vel_ned[2])
    cl = math.cos(lat)
    if abs(lat) > earth.POLE_LIMIT and ve != 0.0:
        raise SingularLatitudeError(f"longitude rate undefined at lat {lat}")
    lon_dot = 0.0 if ve == 0.0 else ve / (cl * (rn + alt))
    return np.array([vn / (rm + alt), lon_dot, -vd])


def velocity_rate(state, f_b):
    """NED acceleration: T f_b + g - (omega_en + 2 omega_ie) x v."""
    f_n = state.dcm @ np.asarray(f_b, dtype=float)
    g_n = earth.gravity_ned(state.lat, state.alt)
    w_ie = earth.earth_rate_ned(state.lat)
    w_en = earth.transport_rate_ned(state.lat, state.alt, state.vel)
    return f_n + g_n - np.cross(w_en + 2.0 * w_ie, state.vel)


def attitude_step(dcm, w_ib_b, w_in_n, dt):
    """One Euler attitude step with re-orthonormalization.

    T <- T ([w_ib_b x] - [w_in_b x]) integrated over dt, where
    w_in_b = T^T w_in_n.
    """
    w_in_b = dcm.T @ np.asarray(w_in_n, dtype=float)
    t_new = dcm + dcm @ (skew(w_ib_b) - skew(w_in_b)) * dt
    return orthonormalize(t_new)


def local_rates(lat, alt, vel_ned):
    """Gravity, earth rate and transport rate at one state, as one tuple.

    Convenience for callers needing all three; single source for the
    combined navigation-frame rate w_in = w_ie + w_en.
    """
    g_n = earth.gravity_ned(lat, alt)
    w_ie = earth.earth_rate_ned(lat)
    w_en = earth.transport_rate_ned(lat, alt, vel_ned)
    return g_n, w_ie, w_en


def _ortho9(m00, m01, m02, m10, m11, m12, m20, m21, m22):
    """Scalar Newton orthogonalization of a near-orthonormal 3x3 matrix.

    Same iteration as rotations.orthonormalize, unrolled to plain floats.
    Returns the nine entries row-major, or None when the input is too far
    from orthonormal (or non-finite) for the iteration to contract, in
    which case the caller must use the general routine.
    """
    for _ in range(8):
        e00 = m00 * m00 + m10 * m10 + m20 * m20 - 1.0
        e11 = m01 * m01 + m11 * m11 + m21 * m21 - 1.0
        e22 = m02 * m02 + m12 * m12 + m22 * m22 - 1.0
        e01 = m00 * m01 + m10 * m11 + m20 * m21
        e02 = m00 * m02 + m10 * m12 + m20 * m22
        e12 = m01 * m02 + m11 * m12 + m21 * m22
        worst = max(abs(e00), abs(e11), abs(e22), abs(e01), abs(e02), abs(e12))
        if worst < 1e-14:
            return m00, m01, m02, m10, m11, m12, m20, m21, m22
        if not worst < 0.5:
            return None
        h00 = 1.0 - 0.5 * e00
        h11 = 1.0 - 0.5 * e11
        h22 = 1.0 - 0.5 * e22
        h01 = -0.5 * e01
        h02 = -0.5 * e02
        h12 = -0.5 * e12
        n00 = m00 * h00 + m01 * h01 + m02 * h02
        n01 = m00 * h01 + m01 * h11 + m02 * h12
        n02 = m00 * h02 + m01 * h12 + m02 * h22
        n10 = m10 * h00 + m11 * h01 + m12 * h02
        n11 = m10 * h01 + m11 * h11 + m12 * h12
        n12 = m10 * h02 + m11 * h12 + m12 * h22
        n20 = m20 * h00 + m21 * h01 + m22 * h02
        n21 = m20 * h01 + m21 * h11 + m22 * h12
        n22 = m20 * h02 + m21 * h12 + m22 * h22
        m00, m01, m02 = n00, n01, n02
        m10, m11, m12 = n10, n11, n12
        m20, m21, m22 = n20, n21, n22
    return None


def propagate_nav(state, imu, dt):
    """Propagate the full navigation state one step of length dt.

    The running bias estimates are subtracted from the raw IMU sample before
    mechanization. All rates are evaluated at the incoming state (forward
    Euler) and the DCM is re-orthonormalized after the step; the returned
    state carries the bias estimates through unchanged.

    The body is written with scalar arithmetic because this function
    dominates simulation run time; it computes exactly the composition of
    position_rate, velocity_rate and attitude_step (tested for agreement).
    """
    lat, alt = state.lat, state.alt
    if not -0.5 * math.pi <= lat <= 0.5 * math.pi:
        raise ValueError(f"latitude {lat} rad outside [-pi/2, pi/2]")
    sl = math.sin(lat)
    cl = math.cos(lat)
    tn = state.dcm
    vn, ve, vd = state.vel.tolist()
    ab = state.accel_bias.tolist()
    gb = state.gyro_bias.tolist()

    fx = float(imu.f_b[0]) - ab[0]
    fy = float(imu.f_b[1]) - ab[1]
    fz = float(imu.f_b[2]) - ab[2]
    wx = float(imu.w_b[0]) - gb[0]
    wy = float(imu.w_b[1]) - gb[1]
    wz = float(imu.w_b[2]) - gb[2]

    # Ellipsoid radii, gravity (Somigliana + free-air), earth/transport rates.
    s2 = sl * sl
    x = 1.0 - earth.E2 * s2
    rn = earth.A / math.sqrt(x)
    rm = rn * (1.0 - earth.E2) / x
    g = earth.GE * (1.0 + earth.SOMIGLIANA_K * s2) / math.sqrt(1.0 - earth.E2 * s2) \
        * (1.0 - 2.0 * alt / earth.A)
    wie_n = earth.RATE * cl
    wie_d = -earth.RATE * sl
    if abs(lat) > earth.POLE_LIMIT and ve != 0.0:
        raise SingularLatitudeError(f"east channel undefined at lat {lat}")
    wen_n = ve / (rn + alt)
    wen_e = -vn / (rm + alt)
    wen_d = -ve * sl / cl / (rn + alt) if ve != 0.0 else 0.0

    # Velocity rate: T f_b + g - (w_en + 2 w_ie) x v.
    t00, t01, t02, t10, t11, t12, t20, t21, t22 = tn.ravel().tolist()
    f_n0 = t00 * fx + t01 * fy + t02 * fz
    f_n1 = t10 * fx + t11 * fy + t12 * fz
    f_n2 = t20 * fx + t21 * fy + t22 * fz
    cx = wen_n + 2.0 * wie_n
    cy = wen_e
    cz = wen_d + 2.0 * wie_d
    new_vel = np.array([
        vn + (f_n0 - (cy * vd - cz * ve)) * dt,
        ve + (f_n1 - (cz * vn - cx * vd)) * dt,
        vd + (f_n2 + g - (cx * ve - cy * vn)) * dt,
    ])

    # Attitude: T <- T ([w_ib_b x] - [w_in_b x]) with w_in rotated into body.
    win_n = wie_n + wen_n
    win_e = wen_e
    win_d = wie_d + wen_d
    bx = (wx - (t00 * win_n + t10 * win_e + t20 * win_d)) * dt
    by = (wy - (t01 * win_n + t11 * win_e + t21 * win_d)) * dt
    bz = (wz - (t02 * win_n + t12 * win_e + t22 * win_d)) * dt
    # T + T [b x], columns combined entrywise.
    ortho = _ortho9(t00 + t01 * bz - t02 * by,
                    t01 - t00 * bz + t02 * bx,
                    t02 + t00 * by - t01 * bx,
                    t10 + t11 * bz - t12 * by,
                    t11 - t10 * bz + t12 * bx,
                    t12 + t10 * by - t11 * bx,
                    t20 + t21 * bz - t22 * by,
                    t21 - t20 * bz + t22 * bx,
                    t22 + t20 * by - t21 * bx)
    if ortho is None:
        dcm = orthonormalize(np.array([
            [t00 + t01 * bz - t02 * by, t01 - t00 * bz + t02 * bx, t02 + t00 * by - t01 * bx],
            [t10 + t11 * bz - t12 * by, t11 - t10 * bz + t12 * bx, t12 + t10 * by - t11 * bx],
            [t20 + t21 * bz - t22 * by, t21 - t20 * bz + t22 * bx, t22 + t20 * by - t21 * bx],
        ]))
    else:
        dcm = np.array(ortho).reshape(3, 3)

    if ve == 0.0:
        lon_dot = 0.0
    else:
        lon_dot = ve / (cl * (rn + alt))
    return NavState(
        lat=lat + vn / (rm + alt) * dt,
        lon=state.lon + lon_dot * dt,
        alt=alt - vd * dt,
        vel=new_vel,
        dcm=dcm,
        accel_bias=state.accel_bias,
        gyro_bias=state.gyro_bias,
    )
