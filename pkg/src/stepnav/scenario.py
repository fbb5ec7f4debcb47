"""Scenario simulation engine.

One engine drives every run mode: fixed-step, speed-threshold, learned
adaptive stepping, and log replay. All timing is integer arithmetic on a
fine base grid (ticks of ``base_dt``), so a mechanization step is a tick
stride and aiding fixes land on the first mechanization tick at or past
their nominal time. Sensor noise is drawn from per-run counter-based
streams, which makes every run reproducible from (seed, run_index) alone,
independent of execution order.
"""
import math
import json
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from . import earth, ekf
from .errors import ConfigError
from .features import HistoryBuffer, extract_features
from .policies import FixedPolicy, LearnedPolicy
from .strapdown import ImuSample, propagate_nav
from .trajectory import BASE_DT, TrajectorySpec, generate_trajectory

#: Candidate mechanization steps for the sweep and selection rule [s].
CANDIDATE_STEPS = (0.002, 0.004, 0.008, 0.01, 0.016, 0.02, 0.032, 0.04, 0.05, 0.1)
#: The two step classes used by the learned policy [s].
CLASS_STEPS = (0.002, 0.04)
#: Default speed-error bound for step selection [m/s].
DEFAULT_BOUND = 0.1

AIDING_KINDS = ("gnss", "dvl")

#: Covariance health thresholds: relative asymmetry, eigenvalue floor,
#: attitude orthonormality.
HEALTH_ASYM_TOL = 1e-10
HEALTH_EIG_FLOOR = -1e-12
HEALTH_ORTHO_TOL = 1e-9


def _ticks_of(value, base_dt, name):
    ticks = int(round(value / base_dt))
    if ticks < 1 or abs(ticks * base_dt - value) > 1e-9 * max(1.0, abs(value)):
        raise ConfigError(f"{name}={value} is not a positive multiple of base_dt={base_dt}")
    return ticks


@dataclass
class ScenarioConfig:
    """Full description of one simulation scenario.

    ``meas_var`` is the aiding velocity noise variance (GNSS in NED or DVL
    in body axes, per ``aiding``); IMU variances are per-sample at any step
    size. ``p0_deg`` is (lat [deg], lon [deg], alt [m]); ``dt`` is the fixed
    mechanization step, or the initial step for adaptive policies.
    """

    trajectory: TrajectorySpec
    aiding: str = "gnss"
    meas_var: float = 1.6e-5
    accel_var: float = 4e-4
    gyro_var: float = 4e-6
    accel_bias_rw_var: float = 0.0
    gyro_bias_rw_var: float = 0.0
    dt: float = 0.01
    dtau: float = 1.0
    duration_s: float = 240.0
    v0: tuple = (5.0, 0.0, 0.0)
    p0_deg: tuple = (32.0, 34.0, 5.0)
    seed: int = 0
    mc_n: int = 1
    bound_mps: float = DEFAULT_BOUND
    joseph: bool = False
    base_dt: float = BASE_DT

    def __post_init__(self):
        if self.aiding not in AIDING_KINDS:
            raise ConfigError(f"aiding must be one of {AIDING_KINDS}")
        for name in ("meas_var", "accel_var", "gyro_var",
                     "accel_bias_rw_var", "gyro_bias_rw_var"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.mc_n < 1:
            raise ConfigError("mc_n must be >= 1")
        if self.bound_mps <= 0:
            raise ConfigError("bound_mps must be > 0")
        _ticks_of(self.dt, self.base_dt, "dt")
        _ticks_of(self.dtau, self.base_dt, "dtau")
        _ticks_of(self.duration_s, self.base_dt, "duration_s")
        if self.dtau + 1e-12 < self.dt:
            raise ConfigError("dtau must be >= dt")
        self.v0 = tuple(float(v) for v in self.v0)
        self.p0_deg = tuple(float(v) for v in self.p0_deg)
        if len(self.v0) != 3 or len(self.p0_deg) != 3:
            raise ConfigError("v0 and p0 must have 3 components")

    @property
    def frame(self):
        return ekf.FRAME_GNSS_NAV if self.aiding == "gnss" else ekf.FRAME_DVL_BODY

    @property
    def p0_rad(self):
        return (math.radians(self.p0_deg[0]), math.radians(self.p0_deg[1]), self.p0_deg[2])

    def to_dict(self):
        d = {
            "trajectory": self.trajectory.to_dict(),
            "aiding": self.aiding,
            "accel_var": self.accel_var,
            "gyro_var": self.gyro_var,
            "dt": self.dt,
            "dtau": self.dtau,
            "duration_s": self.duration_s,
            "v0": list(self.v0),
            "p0": list(self.p0_deg),
            "seed": self.seed,
            "mc_n": self.mc_n,
            "bound_mps": self.bound_mps,
            "joseph": self.joseph,
            "base_dt": self.base_dt,
        }
        d["gnss_vel_var" if self.aiding == "gnss" else "dvl_vel_var"] = self.meas_var
        if self.accel_bias_rw_var or self.gyro_bias_rw_var:
            d["accel_bias_rw_var"] = self.accel_bias_rw_var
            d["gyro_bias_rw_var"] = self.gyro_bias_rw_var
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        aiding = d.pop("aiding", "gnss")
        kwargs = {"aiding": aiding}
        traj = d.pop("trajectory", None)
        if traj is None:
            raise ConfigError("config needs a 'trajectory' table")
        known = {f for f in cls.__dataclass_fields__} - {"trajectory", "meas_var", "p0_deg"}
        for key in ("gnss_vel_var", "dvl_vel_var"):
            if key in d:
                if key != f"{aiding}_vel_var":
                    raise ConfigError(f"{key} does not match aiding={aiding!r}")
                kwargs["meas_var"] = float(d.pop(key))
        if "p0" in d:
            kwargs["p0_deg"] = tuple(d.pop("p0"))
        for key in list(d):
            if key in known:
                kwargs[key] = d.pop(key)
        if d:
            raise ConfigError(f"unknown config keys: {sorted(d)}")
        if isinstance(traj, TrajectorySpec):
            spec = traj
        else:
            traj = dict(traj)
            traj_known = set(TrajectorySpec.__dataclass_fields__)
            bad = set(traj) - traj_known
            if bad:
                raise ConfigError(f"unknown trajectory keys: {sorted(bad)}")
            spec = TrajectorySpec(**traj)
        if "v0" in kwargs:
            kwargs["v0"] = tuple(kwargs["v0"])
        return cls(trajectory=spec, **kwargs)


# Ground-truth cache: trajectories are deterministic in their parameters, so
# Monte-Carlo runs and step sweeps share one copy.
_GT_CACHE = OrderedDict()
_GT_CACHE_MAX = 8


def ground_truth_for(cfg):
    key = (json.dumps(cfg.trajectory.to_dict(), sort_keys=True),
           cfg.v0, cfg.p0_deg, cfg.duration_s, cfg.base_dt)
    gt = _GT_CACHE.get(key)
    if gt is None:
        gt = generate_trajectory(cfg.trajectory, np.asarray(cfg.v0), cfg.p0_rad,
                                 cfg.duration_s, cfg.base_dt)
        _GT_CACHE[key] = gt
        while len(_GT_CACHE) > _GT_CACHE_MAX:
            _GT_CACHE.popitem(last=False)
    else:
        _GT_CACHE.move_to_end(key)
    return gt


class _NoiseStream:
    """Sequential standard-normal rows drawn in fixed-size blocks."""

    def __init__(self, rng, width, chunk=4096):
        self._rng = rng
        self._width = width
        self._chunk = chunk
        self._buf = None
        self._pos = 0

    def next_row(self):
        if self._buf is None or self._pos == self._buf.shape[0]:
            self._buf = self._rng.standard_normal((self._chunk, self._width))
            self._pos = 0
        row = self._buf[self._pos]
        self._pos += 1
        return row


def _run_rng(seed, run_index, stream):
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed, spawn_key=(run_index, stream))))


class SimulatedSource:
    """Measurement source backed by a ground-truth trajectory.

    IMU noise is drawn per consumed mechanization sample (stream 0), so each
    sample has the configured variance at any step size. Aiding fixes are
    synthesized on the nominal dtau grid from true states plus pre-drawn
    noise (stream 1), so the fix values never depend on the stepping.
    """

    def __init__(self, cfg, gt, run_index=0):
        self.base_dt = cfg.base_dt
        self.total_ticks = gt.n_ticks
        want = _ticks_of(cfg.duration_s, cfg.base_dt, "duration_s")
        if want != gt.n_ticks:
            raise ConfigError("ground truth does not cover the configured duration")
        self._f = gt.f_b
        self._w = gt.w_b
        self.gt_vel = gt.vel
        self.initial_state = gt.initial_state()

        self._sa = math.sqrt(cfg.accel_var)
        self._sg = math.sqrt(cfg.gyro_var)
        self._sba = math.sqrt(cfg.accel_bias_rw_var)
        self._sbg = math.sqrt(cfg.gyro_bias_rw_var)
        self._walk = self._sba > 0 or self._sbg > 0
        self._noisy = self._sa > 0 or self._sg > 0 or self._walk
        if self._noisy:
            width = 12 if self._walk else 6
            self._stream = _NoiseStream(_run_rng(cfg.seed, run_index, 0), width)
            self._bias = np.zeros(6)
            self._fw = np.hstack([gt.f_b, gt.w_b])
            self._scale = np.repeat([self._sa, self._sg], 3)
            self._bscale = np.repeat([self._sba, self._sbg], 3)
            self._bstep = np.empty(6)
            self._m = np.empty(6)
            self._mf = self._m[0:3]
            self._mw = self._m[3:6]

        dtau_ticks = _ticks_of(cfg.dtau, cfg.base_dt, "dtau")
        n_fix = self.total_ticks // dtau_ticks
        self.fix_ticks = np.arange(1, n_fix + 1) * dtau_ticks
        rng = _run_rng(cfg.seed, run_index, 1)
        noise = rng.standard_normal((n_fix, 3)) * math.sqrt(cfg.meas_var)
        vals = np.empty((n_fix, 3))
        for j, tick in enumerate(self.fix_ticks):
            v_true = gt.vel[tick]
            if cfg.aiding == "dvl":
                v_true = gt.dcm[tick].T @ v_true
            vals[j] = v_true + noise[j]
        self.fix_vals = vals

    def imu(self, tick):
        """Measured IMU sample holding at fine-grid index ``tick``."""
        if not self._noisy:
            return self._f[tick], self._w[tick]
        row = self._stream.next_row()
        m = self._m
        np.multiply(row[0:6], self._scale, out=m)
        m += self._fw[tick]
        if self._walk:
            np.multiply(row[6:12], self._bscale, out=self._bstep)
            b = self._bias
            b += self._bstep
            m += b
        return self._mf, self._mw


@dataclass
class RunMetrics:
    """Accuracy and cost summary of one run (or a Monte-Carlo average)."""

    mean_speed_error: float
    rms_speed_error: float
    max_speed_error: float
    iterations: int
    n_updates: int = 0
    switches: int = 0


@dataclass
class RunResult:
    metrics: RunMetrics
    timeline: list = field(default_factory=list)
    health: dict = None
    features: list = None
    errors: np.ndarray = None
    imu_log: list = None
    aiding_log: list = None


def speed_error(v_est, v_true):
    """Time-averaged Euclidean norm of the velocity estimation error."""
    diff = np.asarray(v_est, dtype=float) - np.asarray(v_true, dtype=float)
    return float(np.mean(np.linalg.norm(diff, axis=-1)))


# Flat positions written by _fill_phi, in the order its value list is built:
# the 6x6 velocity/tilt coupling entries, then T*dt into rows 0-2 / cols 6-8
# and rows 3-5 / cols 9-11. Everything else is structural (identity diagonal
# and zeros, written once at buffer setup).
_PHI_IDX = np.array(
    [12 * r + c for r, c in
     [(0, 0), (0, 1), (0, 2), (0, 4), (0, 5),
      (1, 0), (1, 1), (1, 2), (1, 3), (1, 5),
      (2, 0), (2, 1), (2, 3), (2, 4),
      (3, 1), (3, 4), (3, 5),
      (4, 0), (4, 3), (4, 5),
      (5, 1), (5, 3), (5, 4)]
     + [(r, c) for r in range(3) for c in range(6, 9)]
     + [(r, c) for r in range(3, 6) for c in range(9, 12)]],
    dtype=np.intp)


def _fill_phi(out, state, fn0, fn1, fn2, dt, dl):
    """Scalar assembly of the transition matrix I + F*dt into a reused buffer.

    Exactly the entries of ekf.transition_matrix over ekf.build_f_matrix
    (tested for agreement). ``dl`` is state.dcm.ravel().tolist(), passed in
    because the caller already has it. The buffer's structural zeros and
    identity diagonal are written once by the caller; the rest is scattered
    through _PHI_IDX in one assignment.
    """
    lat, alt = state.lat, state.alt
    vn, ve, vd = state.vel.tolist()
    sl = math.sin(lat)
    cl = math.cos(lat)
    tl = math.tan(lat)
    s2 = sl * sl
    x = 1.0 - earth.E2 * s2
    rn = earth.A / math.sqrt(x)
    rm = rn * (1.0 - earth.E2) / x
    re = math.sqrt(rm * rn)
    lat_dot = vn / (rm + alt)
    lon_dot = 0.0 if ve == 0.0 else ve / (cl * (rn + alt))
    w_n = (lon_dot + earth.RATE) * cl
    w_e = -lat_dot
    w_d = -(lon_dot + earth.RATE) * sl

    out.flat[_PHI_IDX] = [
        1.0 + vd / re * dt, 2.0 * w_d * dt, -vn / re * dt, fn2 * dt, -fn1 * dt,
        -(w_d - earth.RATE * sl) * dt, 1.0 + (vd + vn * tl) / re * dt,
        (w_n + earth.RATE * cl) * dt, -fn2 * dt, fn0 * dt,
        2.0 * vn / re * dt, -2.0 * w_n * dt, fn1 * dt, -fn0 * dt,
        -dt / (rn + alt), w_d * dt, -w_e * dt,
        dt / (rm + alt), -w_d * dt, w_n * dt,
        tl / (rn + alt) * dt, w_e * dt, -w_n * dt,
        dl[0] * dt, dl[1] * dt, dl[2] * dt,
        dl[3] * dt, dl[4] * dt, dl[5] * dt,
        dl[6] * dt, dl[7] * dt, dl[8] * dt,
        dl[0] * dt, dl[1] * dt, dl[2] * dt,
        dl[3] * dt, dl[4] * dt, dl[5] * dt,
        dl[6] * dt, dl[7] * dt, dl[8] * dt,
    ]


def _check_health(p, dcm, health):
    health["checks"] += 1
    scale = float(np.max(np.abs(p)))
    asym = float(np.max(np.abs(p - p.T))) / scale if scale > 0 else 0.0
    eig = float(np.linalg.eigvalsh(p)[0])
    ortho = float(np.max(np.abs(dcm.T @ dcm - np.eye(3))))
    health["max_asym"] = max(health["max_asym"], asym)
    health["min_eig"] = min(health["min_eig"], eig)
    health["max_ortho_dev"] = max(health["max_ortho_dev"], ortho)
    if asym > HEALTH_ASYM_TOL or eig < HEALTH_EIG_FLOOR or ortho > HEALTH_ORTHO_TOL:
        health["violations"] += 1


def run_scenario(cfg, policy=None, *, run_index=0, gt=None, source=None,
                 collect_features=False, health=False, collect_errors=False,
                 collect_io=False, tune_every_s=None):
    """Run one scenario under a step-size policy.

    Per mechanization cycle: propagate the strapdown solution and the error
    covariance, apply any aiding fix whose nominal time has been reached
    (update, then closed-loop feedback), sample the speed error against
    ground truth, append the solution to the feature history, and finally
    let the policy pick the next step at the tuning cadence.
    """
    if policy is None:
        policy = FixedPolicy(cfg.dt)
    if source is None:
        if gt is None:
            gt = ground_truth_for(cfg)
        source = SimulatedSource(cfg, gt, run_index)
    base = source.base_dt
    total = source.total_ticks
    dtau_ticks = _ticks_of(cfg.dtau, base, "dtau")
    tune_ticks = dtau_ticks if tune_every_s is None else _ticks_of(tune_every_s, base, "tune_every_s")

    active_dt = policy.initial_dt(cfg)
    step = _ticks_of(active_dt, base, "policy step")
    if policy.adaptive:
        for class_dt in getattr(policy, "class_steps", ()):
            cticks = _ticks_of(class_dt, base, "class step")
            if dtau_ticks % cticks:
                raise ConfigError(
                    f"aiding interval {cfg.dtau} is not a multiple of class step {class_dt}")

    qc = ekf.ProcessNoiseConfig(cfg.accel_var, cfg.gyro_var,
                                cfg.accel_bias_rw_var, cfg.gyro_bias_rw_var).qc_diag()
    rd = ekf.MeasurementNoiseConfig(cfg.meas_var).rd_diag()
    # Isotropic per-triad Q^c commutes with the block rotations in G, so
    # Q^d stays diagonal: qc * dt (agrees with discrete_process_noise).
    qd_diag = qc * active_dt
    _, p0 = ekf.init_filter(np.diag(qd_diag))

    state = source.initial_state.copy()
    phi = np.zeros((ekf.N_STATES, ekf.N_STATES))
    phi.flat[::ekf.N_STATES + 1] = 1.0
    tmp = np.empty_like(phi)
    pa = np.empty_like(phi)
    pb = np.empty_like(phi)
    p = np.empty_like(phi)
    p[:] = p0
    # Writable diagonal views, rotated together with their buffers.
    diag_p = p.ravel()[::ekf.N_STATES + 1]
    diag_a = pa.ravel()[::ekf.N_STATES + 1]
    diag_b = pb.ravel()[::ekf.N_STATES + 1]

    need_buffer = policy.needs_features or collect_features
    buffer = HistoryBuffer() if need_buffer else None
    feats_out = [] if collect_features else None
    errors_out = [] if collect_errors else None
    imu_log = [] if collect_io else None
    aiding_log = [] if collect_io else None
    health_out = None
    if health:
        health_out = {"checks": 0, "violations": 0, "max_asym": 0.0,
                      "min_eig": math.inf, "max_ortho_dev": 0.0}

    fix_ticks = source.fix_ticks.tolist()
    fix_vals = source.fix_vals
    n_fix = len(fix_ticks)
    fix_ptr = 0
    next_tune = tune_ticks
    gt_vel = source.gt_vel
    source_imu = source.imu
    adaptive = policy.adaptive

    timeline = []
    seg_start = 0
    err_sum = 0.0
    err_sq = 0.0
    err_max = 0.0
    iterations = 0
    n_updates = 0
    switches = 0
    imu_sample = ImuSample(np.empty(3), np.empty(3))

    tick = 0
    while tick < total:
        if tick + step > total:
            step = total - tick  # clip the last partial stride
        dt_s = step * base
        t0 = tick
        fm, wm = source_imu(tick)
        old = state
        imu_sample.f_b = fm
        imu_sample.w_b = wm
        state = propagate_nav(old, imu_sample, dt_s)

        ba = old.accel_bias
        fx = float(fm[0]) - float(ba[0])
        fy = float(fm[1]) - float(ba[1])
        fz = float(fm[2]) - float(ba[2])
        dl = old.dcm.ravel().tolist()
        fn0 = dl[0] * fx + dl[1] * fy + dl[2] * fz
        fn1 = dl[3] * fx + dl[4] * fy + dl[5] * fz
        fn2 = dl[6] * fx + dl[7] * fy + dl[8] * fz
        _fill_phi(phi, old, fn0, fn1, fn2, dt_s, dl)
        np.matmul(phi, p, out=tmp)
        np.matmul(tmp, phi.T, out=pa)
        np.add(pa, pa.T, out=pb)
        pb *= 0.5
        diag_b += qd_diag
        p, pa, pb = pb, p, pa
        diag_p, diag_a, diag_b = diag_b, diag_p, diag_a

        tick += step
        iterations += 1

        while fix_ptr < n_fix and tick >= fix_ticks[fix_ptr]:
            meas = ekf.AidingMeasurement(fix_vals[fix_ptr], cfg.frame)
            h, dz = ekf.measurement_model(state, meas)
            k = ekf.kalman_gain(p, h, rd)
            dx, p_new = ekf.apply_update(p, k, h, dz, rd, cfg.joseph)
            p[:] = p_new
            state = ekf.inject_errors(state, dx)
            if collect_io:
                aiding_log.append((fix_ticks[fix_ptr] * base,) + tuple(map(float, fix_vals[fix_ptr])))
            fix_ptr += 1
            n_updates += 1
            if health:
                _check_health(p, state.dcm, health_out)
            if collect_features and buffer is not None:
                feats = extract_features(cfg.accel_var, cfg.gyro_var, cfg.meas_var,
                                         cfg.dtau, buffer)
                feats_out.append((tick * base, feats))

        gv0, gv1, gv2 = gt_vel[tick].tolist()
        if collect_io:
            imu_log.append((t0 * base, float(fm[0]), float(fm[1]), float(fm[2]),
                            float(wm[0]), float(wm[1]), float(wm[2]),
                            gv0, gv1, gv2))
        sv0, sv1, sv2 = state.vel.tolist()
        e0 = sv0 - gv0
        e1 = sv1 - gv1
        e2 = sv2 - gv2
        e = math.sqrt(e0 * e0 + e1 * e1 + e2 * e2)
        err_sum += e
        err_sq += e * e
        if e > err_max:
            err_max = e
        if collect_errors:
            errors_out.append((tick * base, e))

        if need_buffer:
            buffer.push_state(state.vel, state.dcm)

        if adaptive and tick >= next_tune and tick < total:
            feats = None
            if policy.needs_features:
                feats = extract_features(cfg.accel_var, cfg.gyro_var, cfg.meas_var,
                                         cfg.dtau, buffer)
            sp = math.sqrt(sv0 * sv0 + sv1 * sv1 + sv2 * sv2)
            new_dt = policy.decide(feats, sp, active_dt)
            if new_dt != active_dt:
                timeline.append((seg_start * base, tick * base, active_dt))
                seg_start = tick
                active_dt = new_dt
                step = _ticks_of(active_dt, base, "policy step")
                qd_diag = qc * active_dt
                switches += 1
            next_tune = (tick // tune_ticks + 1) * tune_ticks

    timeline.append((seg_start * base, total * base, active_dt))
    if health:
        _check_health(p, state.dcm, health_out)

    n = iterations if iterations else 1
    metrics = RunMetrics(
        mean_speed_error=err_sum / n,
        rms_speed_error=math.sqrt(err_sq / n),
        max_speed_error=err_max,
        iterations=iterations,
        n_updates=n_updates,
        switches=switches,
    )
    return RunResult(
        metrics=metrics,
        timeline=timeline,
        health=health_out,
        features=feats_out,
        errors=np.asarray(errors_out) if collect_errors else None,
        imu_log=imu_log,
        aiding_log=aiding_log,
    )


def run_adaptive(cfg, model, *, hysteresis=None, tune_every_s=None,
                 run_index=0, health=False, collect_errors=False):
    """Run the learned step-size policy; cfg.dt is the initial step."""
    kwargs = {} if hysteresis is None else {"hysteresis": hysteresis}
    policy = LearnedPolicy(model, **kwargs)
    return run_scenario(cfg, policy, run_index=run_index, health=health,
                        collect_errors=collect_errors, tune_every_s=tune_every_s)


def count_iterations(timeline):
    """Mechanization cycle count implied by a (t_start, t_end, dt) timeline."""
    total = 0
    for t0, t1, dt in timeline:
        total += int(round((t1 - t0) / dt))
    return total


def _average_metrics(per_run):
    n = len(per_run)
    return RunMetrics(
        mean_speed_error=sum(m.mean_speed_error for m in per_run) / n,
        rms_speed_error=sum(m.rms_speed_error for m in per_run) / n,
        max_speed_error=sum(m.max_speed_error for m in per_run) / n,
        iterations=int(round(sum(m.iterations for m in per_run) / n)),
        n_updates=int(round(sum(m.n_updates for m in per_run) / n)),
        switches=int(round(sum(m.switches for m in per_run) / n)),
    )


_POOL_STATE = {}


def _pool_init(cfg, policy_factory, gt, health):
    _POOL_STATE["cfg"] = cfg
    _POOL_STATE["factory"] = policy_factory
    _POOL_STATE["gt"] = gt
    _POOL_STATE["health"] = health


def _pool_run(indices):
    cfg = _POOL_STATE["cfg"]
    factory = _POOL_STATE["factory"]
    gt = _POOL_STATE["gt"]
    health = _POOL_STATE["health"]
    out = []
    for i in indices:
        policy = factory(cfg) if factory is not None else None
        res = run_scenario(cfg, policy, run_index=i, gt=gt, health=health)
        out.append((res.metrics, res.health))
    return out


def monte_carlo(cfg, policy_factory=None, *, n=None, jobs=1, gt=None, health=False):
    """Average run metrics over ``n`` independent noise realizations.

    Run ``i`` uses noise streams keyed by (cfg.seed, i), so results do not
    depend on ``jobs``. Returns (average RunMetrics, list of per-run
    RunMetrics, list of per-run health dicts or None).
    """
    n = cfg.mc_n if n is None else n
    if n < 1:
        raise ConfigError("monte_carlo needs n >= 1")
    if gt is None:
        gt = ground_truth_for(cfg)
    results = [None] * n
    healths = [None] * n
    if jobs > 1 and n > 1:
        import multiprocessing as mp

        jobs = min(jobs, n)
        chunks = [list(range(j, n, jobs)) for j in range(jobs)]
        ctx = mp.get_context("fork")
        with ctx.Pool(jobs, initializer=_pool_init,
                      initargs=(cfg, policy_factory, gt, health)) as pool:
            for chunk, out in zip(chunks, pool.map(_pool_run, chunks)):
                for i, (metrics, hlth) in zip(chunk, out):
                    results[i] = metrics
                    healths[i] = hlth
    else:
        for i in range(n):
            policy = policy_factory(cfg) if policy_factory is not None else None
            res = run_scenario(cfg, policy, run_index=i, gt=gt, health=health)
            results[i] = res.metrics
            healths[i] = res.health
    return _average_metrics(results), results, healths


@dataclass
class SweepRow:
    dt: float
    mean_speed_error: float
    rms_speed_error: float
    max_speed_error: float
    iterations: int


@dataclass
class SweepResult:
    rows: list
    selected_dt: float
    out_of_bound: bool
    bound_mps: float
    n_mc: int

    def row(self, dt):
        for r in self.rows:
            if r.dt == dt:
                return r
        raise KeyError(dt)


def select_step(rows, bound):
    """Largest candidate whose mean speed error meets the bound.

    Falls back to the smallest candidate, flagged, when none qualifies.
    """
    best = None
    for r in rows:
        if r.mean_speed_error <= bound and (best is None or r.dt > best.dt):
            best = r
    if best is not None:
        return best.dt, False
    return min(rows, key=lambda r: r.dt).dt, True


def sweep_step_sizes(cfg, candidates=CANDIDATE_STEPS, *, n_mc=None, jobs=1, bound=None):
    """Monte-Carlo speed error for each candidate step, plus the selection."""
    bound = cfg.bound_mps if bound is None else bound
    gt = ground_truth_for(cfg)
    rows = []
    for dt in sorted(candidates):
        c = replace(cfg, dt=dt)
        avg, _, _ = monte_carlo(c, n=n_mc, jobs=jobs, gt=gt)
        rows.append(SweepRow(dt=dt,
                             mean_speed_error=avg.mean_speed_error,
                             rms_speed_error=avg.rms_speed_error,
                             max_speed_error=avg.max_speed_error,
                             iterations=avg.iterations))
    selected, flag = select_step(rows, bound)
    return SweepResult(rows=rows, selected_dt=selected, out_of_bound=flag,
                       bound_mps=bound, n_mc=cfg.mc_n if n_mc is None else n_mc)
