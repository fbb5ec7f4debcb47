"""Labeled dataset generation for the step-size classifier.

Scenarios are drawn (in a seeded shuffle) from a Cartesian grid of aiding
noise, aiding interval, IMU noise levels and trajectory shapes. Each
scenario is labeled by short Monte-Carlo runs of the two step classes: the
coarse step if it meets the speed-error bound, otherwise the fine step
(flagged out-of-bound when even the fine step misses). Feature rows come
from one run at the labeled step, one row per aiding interval; warm-up
windows (history buffer not yet full) are excluded and counted.
"""
import itertools
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, FilterDivergenceError, LargeErrorAngleWarning
from .features import FEATURE_NAMES, N_FEATURES
from .presets import dataset_trajectories
from .scenario import CLASS_STEPS, ScenarioConfig, monte_carlo, run_scenario
from . import fileio

#: Grid axes: aiding noise std [m/s], aiding interval [s], IMU noise stds.
R_STD_AXIS = tuple(np.logspace(math.log10(1e-4), math.log10(0.1), 10))
DTAU_AXIS = (0.1, 0.5, 1.0, 1.2, 1.6, 2.0)
ACCEL_STD_AXIS = tuple(np.logspace(math.log10(5e-4), math.log10(0.5), 10))
GYRO_STD_AXIS = tuple(np.logspace(math.log10(1e-4), math.log10(0.1), 10))

#: Desk-scale dataset size; scale up for full runs.
DEFAULT_TARGET_ROWS = 2000

CSV_HEADER = ("scenario_id", "window_idx") + FEATURE_NAMES + ("label_dt_s", "out_of_bound")


@dataclass
class DatasetParams:
    """Grid and sizing knobs for dataset generation."""

    target_rows: int = DEFAULT_TARGET_ROWS
    seed: int = 0
    bound_mps: float = 0.1
    label_mc_n: int = 3
    class_steps: tuple = CLASS_STEPS
    duration_s: float = 30.0
    #: Evenly strided windows kept per scenario (0 keeps every window).
    max_rows_per_scenario: int = 40
    v0: tuple = (5.0, 0.0, 0.0)
    p0_deg: tuple = (32.0, 34.0, 5.0)
    r_std_axis: tuple = R_STD_AXIS
    dtau_axis: tuple = DTAU_AXIS
    accel_std_axis: tuple = ACCEL_STD_AXIS
    gyro_std_axis: tuple = GYRO_STD_AXIS
    trajectories: list = field(default_factory=dataset_trajectories)

    def __post_init__(self):
        if self.target_rows < 1:
            raise ConfigError("target_rows must be >= 1")
        if self.max_rows_per_scenario < 0:
            raise ConfigError("max_rows_per_scenario must be >= 0")
        if len(self.class_steps) != 2:
            raise ConfigError("exactly two step classes are supported")


@dataclass
class Dataset:
    """Feature matrix with labels and provenance columns."""

    x: np.ndarray
    y: np.ndarray
    scenario_ids: np.ndarray
    window_idx: np.ndarray
    out_of_bound: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.x.shape[0]

    def save(self, csv_path, meta_path=None):
        rows = []
        for i in range(self.n):
            rows.append((int(self.scenario_ids[i]), int(self.window_idx[i]))
                        + tuple(float(v) for v in self.x[i])
                        + (float(self.y[i]), bool(self.out_of_bound[i])))
        fileio.write_csv(csv_path, CSV_HEADER, rows)
        if meta_path:
            fileio.save_json(meta_path, self.meta)

    @classmethod
    def load(cls, csv_path, meta_path=None):
        import csv as _csv

        with open(csv_path, newline="") as fh:
            reader = _csv.reader(fh)
            header = tuple(next(reader))
            if header != CSV_HEADER:
                raise ConfigError(f"{csv_path}: unexpected dataset header")
            recs = [row for row in reader if row]
        if not recs:
            raise ConfigError(f"{csv_path}: dataset is empty")
        arr = np.asarray(recs, dtype=float)
        meta = fileio.load_json(meta_path) if meta_path else {}
        return cls(
            x=np.ascontiguousarray(arr[:, 2:2 + N_FEATURES]),
            y=arr[:, 2 + N_FEATURES],
            scenario_ids=arr[:, 0].astype(int),
            window_idx=arr[:, 1].astype(int),
            out_of_bound=arr[:, 3 + N_FEATURES] != 0,
            meta=meta,
        )


def _scenario_grid(params):
    """All grid combinations as dicts, before the seeded shuffle."""
    combos = []
    for (ti, (tname, traj)), r_std, dtau, a_std, g_std in itertools.product(
            enumerate(params.trajectories), params.r_std_axis, params.dtau_axis,
            params.accel_std_axis, params.gyro_std_axis):
        combos.append({
            "trajectory_name": tname,
            "trajectory_index": ti,
            "meas_var": float(r_std) ** 2,
            "dtau": float(dtau),
            "accel_var": float(a_std) ** 2,
            "gyro_var": float(g_std) ** 2,
        })
    return combos


def _scenario_config(params, combo, seed):
    traj = params.trajectories[combo["trajectory_index"]][1]
    return ScenarioConfig(
        trajectory=traj,
        aiding="gnss",
        meas_var=combo["meas_var"],
        accel_var=combo["accel_var"],
        gyro_var=combo["gyro_var"],
        dt=max(params.class_steps),
        dtau=combo["dtau"],
        duration_s=params.duration_s,
        v0=params.v0,
        p0_deg=params.p0_deg,
        seed=seed,
    )


def _labeling_error(cfg, mc_n):
    """Monte-Carlo mean speed error, with filter divergence read as infinite.

    Grid corners are allowed to push the filter past its numeric range; for
    labeling that simply means the step fails the bound, so the warnings
    those runs emit are noise and divergence is a value, not a crash.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LargeErrorAngleWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            avg, _, _ = monte_carlo(cfg, n=mc_n)
        except FilterDivergenceError:
            return math.inf
    err = avg.mean_speed_error
    return err if math.isfinite(err) else math.inf


def label_scenario(cfg, class_steps=CLASS_STEPS, bound=0.1, mc_n=3):
    """Pick the step class for a scenario by the speed-error bound.

    Returns (label_dt, out_of_bound, errors) where ``errors`` maps each
    evaluated step to its Monte-Carlo mean speed error (infinite when the
    filter diverges at that step).
    """
    fine = min(class_steps)
    coarse = max(class_steps)
    errors = {}
    errors[coarse] = _labeling_error(replace(cfg, dt=coarse), mc_n)
    if errors[coarse] <= bound:
        return coarse, False, errors
    errors[fine] = _labeling_error(replace(cfg, dt=fine), mc_n)
    return fine, errors[fine] > bound, errors


def scenario_rows(cfg, label_dt):
    """Feature rows from one run at the labeled step; warm-up excluded.

    Returns (rows, n_warmup, n_nonfinite) with one row per completed aiding
    window. A run that diverges yields no windows; windows whose features
    overflowed are dropped and counted in ``n_nonfinite``.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LargeErrorAngleWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            res = run_scenario(replace(cfg, dt=label_dt), run_index=0,
                               collect_features=True)
        except FilterDivergenceError:
            return [], 0, 0
    rows = []
    n_warmup = 0
    n_nonfinite = 0
    for idx, (_, feats) in enumerate(res.features):
        if feats.warmup:
            n_warmup += 1
            continue
        if not np.isfinite(feats.values).all():
            n_nonfinite += 1
            continue
        rows.append((idx, feats.values))
    return rows, n_warmup, n_nonfinite


_DS_PARAMS = None


def _ds_init(params):
    global _DS_PARAMS
    _DS_PARAMS = params


def _ds_job(args):
    sid, combo = args
    params = _DS_PARAMS
    cfg = _scenario_config(params, combo, seed=params.seed + 1 + sid)
    label_dt, is_oob, errors = label_scenario(
        cfg, params.class_steps, params.bound_mps, params.label_mc_n)
    rows, n_warm, n_nonfinite = scenario_rows(cfg, label_dt)
    n_windows = len(rows)
    cap = params.max_rows_per_scenario
    if cap and n_windows > cap:
        # Even stride across the run, so kept windows span the trajectory.
        rows = [rows[i * n_windows // cap] for i in range(cap)]
    return (sid, combo, cfg.seed, label_dt, is_oob, errors, rows,
            n_windows, n_warm, n_nonfinite)


def _scenario_results(params, jobs, order, combos):
    """Per-scenario labeling results, in grid-shuffle order."""
    work = [(sid, combos[int(gi)]) for sid, gi in enumerate(order)]
    if jobs > 1:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(jobs, initializer=_ds_init, initargs=(params,)) as pool:
            yield from pool.imap(_ds_job, work, chunksize=4)
    else:
        _ds_init(params)
        for item in work:
            yield _ds_job(item)


def build_dataset(params=None, jobs=1, progress=None):
    """Generate the labeled dataset up to ``params.target_rows`` rows.

    Scenarios are labeled in a fixed seeded order regardless of ``jobs``,
    so the emitted rows are reproducible at any parallelism. Each scenario
    contributes at most ``max_rows_per_scenario`` evenly strided windows,
    keeping short aiding intervals from crowding out the rest of the grid.
    """
    params = params or DatasetParams()
    combos = _scenario_grid(params)
    order = np.random.default_rng(params.seed).permutation(len(combos))
    # Warm the trajectory cache before any fork so workers inherit it.
    from .scenario import ground_truth_for
    for ti, (_, _traj) in enumerate(params.trajectories):
        ground_truth_for(_scenario_config(
            params, dict(trajectory_index=ti, trajectory_name="", meas_var=1e-4,
                         dtau=1.0, accel_var=1e-4, gyro_var=1e-6), seed=0))

    xs = []
    ys = []
    sids = []
    widx = []
    oob = []
    scen_meta = []
    n_rows = 0
    n_warmup_total = 0
    n_nonfinite_total = 0
    n_diverged = 0
    for (sid, combo, seed, label_dt, is_oob, errors, rows, n_windows, n_warm,
            n_nonfinite) in _scenario_results(params, jobs, order, combos):
        n_warmup_total += n_warm
        n_nonfinite_total += n_nonfinite
        if n_windows == 0 and n_warm == 0 and n_nonfinite == 0:
            n_diverged += 1
        take = min(len(rows), params.target_rows - n_rows)
        for widx_i, values in rows[:take]:
            xs.append(values)
            ys.append(label_dt)
            sids.append(sid)
            widx.append(widx_i)
            oob.append(is_oob)
        n_rows += take
        scen_meta.append({
            "scenario_id": sid,
            **combo,
            "seed": seed,
            "label_dt_s": label_dt,
            "out_of_bound": is_oob,
            "label_errors": {repr(k): (v if math.isfinite(v) else None)
                             for k, v in errors.items()},
            "n_windows": n_windows,
            "n_rows": take,
            "n_warmup": n_warm,
            "n_nonfinite": n_nonfinite,
        })
        if progress:
            progress(sid, n_rows)
        if n_rows >= params.target_rows:
            break
    if n_rows < params.target_rows:
        raise ConfigError(
            f"grid exhausted at {n_rows} rows; lower target_rows or widen the grid")

    meta = {
        "target_rows": params.target_rows,
        "seed": params.seed,
        "bound_mps": params.bound_mps,
        "label_mc_n": params.label_mc_n,
        "class_steps": list(params.class_steps),
        "duration_s": params.duration_s,
        "axes": {
            "r_std": [float(v) for v in params.r_std_axis],
            "dtau": [float(v) for v in params.dtau_axis],
            "accel_std": [float(v) for v in params.accel_std_axis],
            "gyro_std": [float(v) for v in params.gyro_std_axis],
            "trajectories": [name for name, _ in params.trajectories],
        },
        "max_rows_per_scenario": params.max_rows_per_scenario,
        "n_warmup_excluded": n_warmup_total,
        "n_nonfinite_excluded": n_nonfinite_total,
        "n_diverged_scenarios": n_diverged,
        "scenarios": scen_meta,
    }
    return Dataset(
        x=np.asarray(xs),
        y=np.asarray(ys),
        scenario_ids=np.asarray(sids),
        window_idx=np.asarray(widx),
        out_of_bound=np.asarray(oob, dtype=bool),
        meta=meta,
    )


def train_test_split(ds, test_frac=0.2, seed=0):
    """Stratified row split; returns (train_idx, test_idx)."""
    rng = np.random.default_rng(seed)
    train_idx = []
    test_idx = []
    for label in np.unique(ds.y):
        idx = np.flatnonzero(ds.y == label)
        rng.shuffle(idx)
        n_test = max(1, int(round(test_frac * idx.size)))
        test_idx.append(idx[:n_test])
        train_idx.append(idx[n_test:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def kfold_indices(y, k=5, seed=0):
    """Stratified k-fold assignment; yields (train_idx, val_idx) pairs."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=int)
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            fold_of[i] = j % k
    for fold in range(k):
        val = np.flatnonzero(fold_of == fold)
        train = np.flatnonzero(fold_of != fold)
        yield train, val
