"""Kinematically consistent ground-truth trajectory generation.

Every trajectory kind compiles to a per-tick command profile (yaw rate and
along-track acceleration) on a fine time grid. The generator maintains the
true navigation state by running the same forward-Euler mechanization used
by the estimator and solves each tick's specific force exactly from the
desired next velocity, so re-mechanizing the emitted IMU stream from the
initial state reproduces the stored states to rounding error.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import earth
from .errors import ConfigError
from .rotations import dcm_from_euler
from .strapdown import ImuSample, NavState, propagate_nav

#: Fine time grid step for ground truth [s].
BASE_DT = 0.001

KINDS = ("straight_line", "circle", "rectangle", "figure8", "waypoint_spline", "segments")


@dataclass
class TrajectorySpec:
    """Declarative description of a vehicle trajectory.

    ``segments`` is the generic profile: a list of (duration_s, yaw_rate_rad_s,
    accel_mps2) commands, padded with straight-and-level flight if shorter than
    the scenario. The named kinds are conveniences that compile onto it;
    ``waypoint_spline`` instead follows a cubic spline fitted through local
    north/east waypoints at constant speed.
    """

    kind: str = "straight_line"
    radius: float = 100.0
    direction: int = 1
    leg_s: float = 20.0
    corner_rate: float = 0.3
    turn_rate: float = 0.3
    half_period_s: float = 20.0
    waypoints: list = field(default_factory=list)
    segments: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown trajectory kind {self.kind!r}")
        if self.kind == "circle" and self.radius <= 0:
            raise ConfigError("circle radius must be > 0")
        if self.kind == "rectangle" and (self.leg_s <= 0 or self.corner_rate <= 0):
            raise ConfigError("rectangle needs leg_s > 0 and corner_rate > 0")
        if self.kind == "figure8" and (self.turn_rate == 0 or self.half_period_s <= 0):
            raise ConfigError("figure8 needs turn_rate != 0 and half_period_s > 0")
        if self.kind == "waypoint_spline" and len(self.waypoints) < 3:
            raise ConfigError("waypoint_spline needs at least 3 waypoints")
        if self.kind == "segments" and not self.segments:
            raise ConfigError("segments kind needs a nonempty segment list")

    def to_dict(self):
        return {
            "kind": self.kind, "radius": self.radius, "direction": self.direction,
            "leg_s": self.leg_s, "corner_rate": self.corner_rate,
            "turn_rate": self.turn_rate, "half_period_s": self.half_period_s,
            "waypoints": [list(map(float, w)) for w in self.waypoints],
            "segments": [list(map(float, s)) for s in self.segments],
        }


@dataclass
class GroundTruth:
    """True states on the fine grid plus the exact IMU stream that drives them.

    Arrays hold n_ticks + 1 states; ``f_b[k]``/``w_b[k]`` drive the step from
    state k to state k + 1.
    """

    base_dt: float
    lat: np.ndarray
    lon: np.ndarray
    alt: np.ndarray
    vel: np.ndarray
    dcm: np.ndarray
    f_b: np.ndarray
    w_b: np.ndarray

    @property
    def n_ticks(self):
        return self.f_b.shape[0]

    def nav_state(self, idx):
        """NavState at fine-grid index idx (biases zero)."""
        return NavState(float(self.lat[idx]), float(self.lon[idx]), float(self.alt[idx]),
                        self.vel[idx].copy(), self.dcm[idx].copy())

    def initial_state(self):
        return self.nav_state(0)


def _segment_commands(segments, n_ticks, base_dt):
    """Expand (duration, yaw_rate, accel) segments to per-tick arrays."""
    yaw_rate = np.zeros(n_ticks)
    accel = np.zeros(n_ticks)
    tick = 0
    for dur, rate, acc in segments:
        n = int(round(dur / base_dt))
        if n < 0:
            raise ConfigError("segment duration must be >= 0")
        stop = min(tick + n, n_ticks)
        yaw_rate[tick:stop] = rate
        accel[tick:stop] = acc
        tick = stop
        if tick >= n_ticks:
            break
    return yaw_rate, accel


def _compile_commands(spec, speed, duration_s, base_dt):
    """Per-tick (yaw_rate, accel) commands for every non-spline kind."""
    n_ticks = int(round(duration_s / base_dt))
    if spec.kind == "straight_line":
        return np.zeros(n_ticks), np.zeros(n_ticks)
    if spec.kind == "circle":
        rate = spec.direction * speed / spec.radius
        return np.full(n_ticks, rate), np.zeros(n_ticks)
    if spec.kind == "rectangle":
        corner_s = 0.5 * math.pi / spec.corner_rate
        segs = []
        t = 0.0
        while t < duration_s:
            segs.append((spec.leg_s, 0.0, 0.0))
            segs.append((corner_s, spec.direction * spec.corner_rate, 0.0))
            t += spec.leg_s + corner_s
        return _segment_commands(segs, n_ticks, base_dt)
    if spec.kind == "figure8":
        segs = []
        t = 0.0
        sign = 1.0
        while t < duration_s:
            segs.append((spec.half_period_s, sign * spec.turn_rate, 0.0))
            sign = -sign
            t += spec.half_period_s
        return _segment_commands(segs, n_ticks, base_dt)
    if spec.kind == "segments":
        return _segment_commands(spec.segments, n_ticks, base_dt)
    raise ConfigError(f"kind {spec.kind!r} has no command profile")


def _spline_commands(spec, speed, duration_s, base_dt):
    """Yaw-rate commands that follow an arc-length cubic spline at fixed speed."""
    from scipy.interpolate import CubicSpline

    wp = np.asarray(spec.waypoints, dtype=float)
    chord = np.linalg.norm(np.diff(wp, axis=0), axis=1)
    if np.any(chord == 0):
        raise ConfigError("waypoint_spline waypoints must be distinct")
    u = np.concatenate([[0.0], np.cumsum(chord)])
    cs = CubicSpline(u, wp, axis=0)
    # Refine parameter -> arc length on a dense grid, then sample curvature
    # at the constant-speed stations.
    uu = np.linspace(0.0, u[-1], max(2000, 20 * len(wp)))
    d = cs(uu, 1)
    ds = np.linalg.norm(d, axis=1)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (ds[1:] + ds[:-1]) * np.diff(uu))])
    n_ticks = int(round(duration_s / base_dt))
    t = np.arange(n_ticks) * base_dt
    want = np.minimum(speed * t, s[-1])
    ui = np.interp(want, s, uu)
    d1 = cs(ui, 1)
    d2 = cs(ui, 2)
    denom = (d1[:, 0] ** 2 + d1[:, 1] ** 2) ** 1.5
    kappa = np.where(denom > 0, (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / np.maximum(denom, 1e-12), 0.0)
    yaw_rate = np.where(want < s[-1], kappa * speed, 0.0)
    return yaw_rate, np.zeros(n_ticks)


def initial_nav_state(v0, p0_rad):
    """Navigation state at departure: level attitude, yaw along the velocity.

    The same construction seeds trajectory generation and log replay, so a
    replayed run starts from the exact state the original run used.
    """
    v0 = np.asarray(v0, dtype=float)
    lat0, lon0, alt0 = p0_rad
    speed = math.hypot(v0[0], v0[1])
    yaw0 = math.atan2(v0[1], v0[0]) if speed > 0 else 0.0
    return NavState(lat0, lon0, alt0, v0.copy(), dcm_from_euler(0.0, 0.0, yaw0))


def generate_trajectory(spec, v0, p0_rad, duration_s, base_dt=BASE_DT):
    """Simulate the true trajectory and its exact IMU stream.

    Parameters
    ----------
    spec : TrajectorySpec
    v0 : array_like, shape (3,)
        Initial NED velocity [m/s]. Initial yaw is the heading of the
        horizontal component (north if it vanishes); roll and pitch start 0.
    p0_rad : tuple
        Initial (lat [rad], lon [rad], alt [m]).
    duration_s : float
    base_dt : float
        Fine grid step; must divide the scenario timing.

    Returns
    -------
    GroundTruth
    """
    if duration_s <= 0:
        raise ConfigError("duration_s must be > 0")
    v0 = np.asarray(v0, dtype=float)
    speed0 = math.hypot(v0[0], v0[1])
    if spec.kind == "waypoint_spline":
        yaw_rate_cmd, accel_cmd = _spline_commands(spec, speed0, duration_s, base_dt)
    else:
        yaw_rate_cmd, accel_cmd = _compile_commands(spec, speed0, duration_s, base_dt)
    n_ticks = yaw_rate_cmd.shape[0]

    state = initial_nav_state(v0, p0_rad)

    lat = np.empty(n_ticks + 1)
    lon = np.empty(n_ticks + 1)
    alt = np.empty(n_ticks + 1)
    vel = np.empty((n_ticks + 1, 3))
    dcm = np.empty((n_ticks + 1, 3, 3))
    f_b = np.empty((n_ticks, 3))
    w_b = np.empty((n_ticks, 3))

    imu = ImuSample(np.empty(3), np.empty(3))
    for k in range(n_ticks):
        lat[k] = state.lat
        lon[k] = state.lon
        alt[k] = state.alt
        vel[k] = state.vel
        dcm[k] = state.dcm

        vn = float(state.vel[0])
        ve = float(state.vel[1])
        vd = float(state.vel[2])
        rate = float(yaw_rate_cmd[k])
        # Desired next velocity: rotate the horizontal velocity by the
        # commanded yaw increment and apply the along-track speed change.
        ang = rate * base_dt
        c, s = math.cos(ang), math.sin(ang)
        nvn = c * vn - s * ve
        nve = s * vn + c * ve
        acc = float(accel_cmd[k])
        if acc != 0.0:
            sp = math.hypot(nvn, nve)
            nsp = max(0.0, sp + acc * base_dt)
            if sp > 0.0:
                scale = nsp / sp
                nvn *= scale
                nve *= scale

        # Gravity, earth rate and transport rate in the same form the
        # mechanization evaluates them, then the velocity rate solved
        # backwards for the specific force that lands on the next velocity.
        la = state.lat
        al = state.alt
        sl = math.sin(la)
        cl = math.cos(la)
        s2 = sl * sl
        x = 1.0 - earth.E2 * s2
        rn = earth.A / math.sqrt(x)
        rm = rn * (1.0 - earth.E2) / x
        g = earth.GE * (1.0 + earth.SOMIGLIANA_K * s2) / math.sqrt(1.0 - earth.E2 * s2) \
            * (1.0 - 2.0 * al / earth.A)
        wie_n = earth.RATE * cl
        wie_d = -earth.RATE * sl
        wen_n = ve / (rn + al)
        wen_e = -vn / (rm + al)
        wen_d = -ve * sl / cl / (rn + al) if ve != 0.0 else 0.0
        cx = wen_n + 2.0 * wie_n
        cy = wen_e
        cz = wen_d + 2.0 * wie_d
        fn0 = (nvn - vn) / base_dt + (cy * vd - cz * ve)
        fn1 = (nve - ve) / base_dt + (cz * vn - cx * vd)
        fn2 = (cx * ve - cy * vn) - g

        t = state.dcm
        fb = f_b[k]
        fb[0] = t[0, 0] * fn0 + t[1, 0] * fn1 + t[2, 0] * fn2
        fb[1] = t[0, 1] * fn0 + t[1, 1] * fn1 + t[2, 1] * fn2
        fb[2] = t[0, 2] * fn0 + t[1, 2] * fn1 + t[2, 2] * fn2
        wn0 = wie_n + wen_n
        wn1 = wen_e
        wn2 = wie_d + wen_d + rate
        wb = w_b[k]
        wb[0] = t[0, 0] * wn0 + t[1, 0] * wn1 + t[2, 0] * wn2
        wb[1] = t[0, 1] * wn0 + t[1, 1] * wn1 + t[2, 1] * wn2
        wb[2] = t[0, 2] * wn0 + t[1, 2] * wn1 + t[2, 2] * wn2

        imu.f_b = fb
        imu.w_b = wb
        state = propagate_nav(state, imu, base_dt)

    lat[n_ticks] = state.lat
    lon[n_ticks] = state.lon
    alt[n_ticks] = state.alt
    vel[n_ticks] = state.vel
    dcm[n_ticks] = state.dcm
    return GroundTruth(base_dt, lat, lon, alt, vel, dcm, f_b, w_b)
