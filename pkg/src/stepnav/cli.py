"""Command-line interface.

Every command resolves its inputs into a plain-dict argument record, runs,
and writes its outputs plus a manifest holding that record and content
hashes. ``rerun`` executes a manifest's stored record again; since all
outputs are written deterministically, a rerun reproduces them byte for
byte (hash-checked external inputs included).
"""
import functools
import json
import os
import sys
from dataclasses import asdict, replace

import click
import numpy as np

from . import dataset as ds
from . import fileio, metrics, mrmr, presets, svm
from .errors import ConfigError, NavError
from .features import FEATURE_NAMES
from .policies import FixedPolicy, LearnedPolicy, SpeedThresholdPolicy
from .replay import export_log, replay_log
from .scenario import (CANDIDATE_STEPS, CLASS_STEPS, ScenarioConfig, monte_carlo,
                       run_adaptive, run_scenario, sweep_step_sizes)


def _emit_error(kind, exc):
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}) + "\n")


def _guarded(fn):
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _emit_error("config", exc)
            sys.exit(2)
        except (NavError, OSError, ValueError) as exc:
            _emit_error(type(exc).__name__, exc)
            sys.exit(1)
    return inner


def _resolve_seed(seed_flag, cfg_dict):
    if seed_flag is not None:
        return int(seed_flag)
    if cfg_dict is not None and "seed" in cfg_dict:
        return int(cfg_dict["seed"])
    env = os.environ.get("STEPNAV_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"STEPNAV_SEED={env!r} is not an integer") from None
    return 0


def _resolve_config(config_path, preset, seed_flag, overrides):
    if (config_path is None) == (preset is None):
        raise ConfigError("give exactly one of --config or --preset")
    if preset is not None:
        if preset not in presets.PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; have {sorted(presets.PRESETS)}")
        cfg_dict = presets.PRESETS[preset]().to_dict()
    else:
        cfg_dict = fileio.load_config(config_path)
    cfg_dict["seed"] = _resolve_seed(seed_flag, cfg_dict)
    for key, val in overrides.items():
        if val is not None:
            cfg_dict[key] = val
    cfg = ScenarioConfig.from_dict(cfg_dict)
    return cfg, cfg.to_dict()


def _metrics_dict(m):
    return {k: (int(v) if isinstance(v, (int, np.integer)) else float(v))
            for k, v in asdict(m).items()}


def _timeline_list(timeline):
    return [[float(t0), float(t1), float(dt)] for t0, t1, dt in timeline]


def _out_dir(out):
    os.makedirs(out, exist_ok=True)
    return out


@click.group()
def main():
    """Velocity-aided INS simulation with adaptive mechanization stepping."""


# Each command body is a module-level function taking the args record, so
# `rerun` can dispatch to it from a stored manifest.

def _parse_policy(text, v_thresh, fine, coarse):
    """Parse a policy spec: fixed[:dt], baseline|speed[:thresh], learned:path.

    Returns (policy_dict, dt_override); the dt in ``fixed:<dt>`` overrides
    the scenario step.
    """
    kind, _, arg = text.partition(":")
    if kind == "fixed":
        return {"kind": "fixed"}, (float(arg) if arg else None)
    if kind in ("baseline", "speed"):
        if arg:
            v_thresh = float(arg)
        return {"kind": "baseline", "fine": fine, "coarse": coarse,
                "v_thresh": v_thresh}, None
    if kind == "learned":
        if not arg:
            raise ConfigError("learned policy needs a model path (learned:<path>)")
        return {"kind": "learned", "model_path": arg}, None
    raise ConfigError(f"unknown policy {text!r}")


def _do_simulate(args, out):
    cfg = ScenarioConfig.from_dict(args["config"])
    pol = args["policy"]
    inputs = {}
    if pol["kind"] == "fixed":
        policy = FixedPolicy(cfg.dt)
    elif pol["kind"] == "baseline":
        policy = SpeedThresholdPolicy(pol["fine"], pol["coarse"], pol["v_thresh"])
    elif pol["kind"] == "learned":
        policy = LearnedPolicy(svm.load_model(pol["model_path"]))
        inputs["model_path"] = pol["model_path"]
    else:
        raise ConfigError(f"unknown policy kind {pol['kind']!r}")
    res = run_scenario(cfg, policy, health=args["health"], collect_io=args["export_log"])
    result = {
        "config": args["config"],
        "policy": pol,
        "metrics": _metrics_dict(res.metrics),
        "timeline": _timeline_list(res.timeline),
        "health": res.health,
    }
    fileio.save_json(os.path.join(out, "result.json"), result)
    fileio.save_json(os.path.join(out, "config.json"), args["config"])
    outputs = {"result.json": os.path.join(out, "result.json"),
               "config.json": os.path.join(out, "config.json")}
    if args["export_log"]:
        imu_path = os.path.join(out, "imu_log.csv")
        aiding_path = os.path.join(out, "aiding_log.csv")
        export_log(res, cfg, imu_path, aiding_path)
        outputs["imu_log.csv"] = imu_path
        outputs["aiding_log.csv"] = aiding_path
    return outputs, inputs


@main.command("simulate")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Scenario JSON file.")
@click.option("--preset", default=None, help="Named preset scenario.")
@click.option("--policy", "policy_spec", default="fixed",
              help="fixed[:dt] | baseline|speed[:thresh] | learned:<model path>.")
@click.option("--dt", type=float, default=None, help="Override mechanization step [s].")
@click.option("--duration", "duration_s", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--v-thresh", type=float, default=None,
              help="Baseline policy speed threshold [m/s].")
@click.option("--fine", type=float, default=CLASS_STEPS[0])
@click.option("--coarse", type=float, default=CLASS_STEPS[1])
@click.option("--health/--no-health", default=True)
@click.option("--export-log", "export_log_flag", is_flag=True, default=False)
@click.option("--out", required=True, type=click.Path())
@_guarded
def simulate_cmd(config_path, preset, policy_spec, dt, duration_s, seed, v_thresh,
                 fine, coarse, health, export_log_flag, out):
    """Run one scenario under a fixed, speed-threshold, or learned policy."""
    pol, dt_override = _parse_policy(policy_spec, v_thresh, fine, coarse)
    if dt_override is not None:
        dt = dt_override
    cfg, cfg_dict = _resolve_config(config_path, preset, seed,
                                    {"dt": dt, "duration_s": duration_s})
    if pol["kind"] == "baseline" and pol["v_thresh"] is None:
        pol["v_thresh"] = (presets.V_THRESH_GNSS if cfg.aiding == "gnss"
                           else presets.V_THRESH_DVL)
    args = {"config": cfg_dict, "policy": pol, "health": health,
            "export_log": export_log_flag}
    out = _out_dir(out)
    outputs, inputs = _do_simulate(args, out)
    fileio.write_manifest(os.path.join(out, "manifest.json"), "simulate", args,
                          inputs=inputs, outputs=outputs)


def _do_sweep(args, out, jobs=1):
    cfg = ScenarioConfig.from_dict(args["config"])
    res = sweep_step_sizes(cfg, tuple(args["candidates"]), n_mc=args["mc"],
                           jobs=jobs, bound=args["bound"])
    rows = [{"dt": r.dt, "mean_speed_error": r.mean_speed_error,
             "rms_speed_error": r.rms_speed_error, "max_speed_error": r.max_speed_error,
             "iterations": r.iterations} for r in res.rows]
    payload = {
        "config": args["config"],
        "bound_mps": res.bound_mps,
        "n_mc": res.n_mc,
        "rows": rows,
        "selected_dt": res.selected_dt,
        "out_of_bound": res.out_of_bound,
    }
    fileio.save_json(os.path.join(out, "sweep.json"), payload)
    fileio.write_csv(os.path.join(out, "sweep.csv"),
                     ("dt_s", "mean_speed_error", "rms_speed_error",
                      "max_speed_error", "iterations"),
                     [(r.dt, r.mean_speed_error, r.rms_speed_error,
                       r.max_speed_error, r.iterations) for r in res.rows])
    return {"sweep.json": os.path.join(out, "sweep.json"),
            "sweep.csv": os.path.join(out, "sweep.csv")}, {}


@main.command("sweep")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--preset", default=None)
@click.option("--mc", type=int, default=None, help="Monte-Carlo runs per candidate.")
@click.option("--bound", type=float, default=None, help="Speed-error bound [m/s].")
@click.option("--candidates", default=None,
              help="Comma-separated steps; defaults to the standard ladder.")
@click.option("--jobs", type=int, default=1)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def sweep_cmd(config_path, preset, mc, bound, candidates, jobs, seed, out):
    """Monte-Carlo speed error across candidate steps, with selection."""
    cfg, cfg_dict = _resolve_config(config_path, preset, seed, {})
    cand = CANDIDATE_STEPS if candidates is None else tuple(
        float(c) for c in candidates.split(","))
    args = {"config": cfg_dict, "candidates": list(cand),
            "mc": mc, "bound": bound if bound is not None else cfg.bound_mps}
    out = _out_dir(out)
    outputs, inputs = _do_sweep(args, out, jobs=jobs)
    fileio.write_manifest(os.path.join(out, "manifest.json"), "sweep", args,
                          inputs=inputs, outputs=outputs)


def _do_gen_dataset(args, out, jobs=1):
    params = ds.DatasetParams(
        target_rows=args["target_rows"],
        seed=args["seed"],
        bound_mps=args["bound"],
        label_mc_n=args["label_mc_n"],
    )
    data = ds.build_dataset(params, jobs=jobs)
    csv_path = os.path.join(out, "dataset.csv")
    meta_path = os.path.join(out, "dataset_meta.json")
    data.save(csv_path, meta_path)
    return {"dataset.csv": csv_path, "dataset_meta.json": meta_path}, {}


@main.command("gen-dataset")
@click.option("--target-rows", type=int, default=ds.DEFAULT_TARGET_ROWS)
@click.option("--full", is_flag=True, default=False,
              help="Full-scale dataset (about 9x the desk size).")
@click.option("--bound", type=float, default=0.1)
@click.option("--label-mc", "label_mc_n", type=int, default=3)
@click.option("--jobs", type=int, default=1)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def gen_dataset_cmd(target_rows, full, bound, label_mc_n, jobs, seed, out):
    """Generate the labeled step-classification dataset."""
    if full:
        target_rows = 18000
    args = {"target_rows": target_rows, "bound": bound, "label_mc_n": label_mc_n,
            "seed": _resolve_seed(seed, None)}
    out = _out_dir(out)
    outputs, inputs = _do_gen_dataset(args, out, jobs=jobs)
    fileio.write_manifest(os.path.join(out, "manifest.json"), "gen-dataset", args,
                          inputs=inputs, outputs=outputs)


def _do_train(args, out):
    data = ds.Dataset.load(args["dataset_path"])
    train_idx, test_idx = ds.train_test_split(data, args["test_frac"], args["seed"])
    model = svm.train_svm(data.x[train_idx], data.y[train_idx],
                          kernel=args["kernel"], c=args["c"], seed=args["seed"])
    report = metrics.evaluate_model(model, data.x[test_idx], data.y[test_idx])
    model_path = os.path.join(out, "model.json")
    svm.save_model(model, model_path)
    fileio.save_json(os.path.join(out, "train_report.json"), {
        "dataset": args["dataset_path"],
        "kernel": args["kernel"],
        "C": args["c"],
        "seed": args["seed"],
        "n_train": int(train_idx.size),
        "n_test": int(test_idx.size),
        "test": report.to_dict(),
    })
    return ({"model.json": model_path,
             "train_report.json": os.path.join(out, "train_report.json")},
            {"dataset_path": args["dataset_path"]})


@main.command("train")
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--kernel", type=click.Choice(list(svm.KERNELS)), default="poly2")
@click.option("--c", "c_value", type=float, default=svm.DEFAULT_C)
@click.option("--test-frac", type=float, default=0.2)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def train_cmd(dataset_path, kernel, c_value, test_frac, seed, out):
    """Train the step classifier on a dataset CSV."""
    args = {"dataset_path": dataset_path, "kernel": kernel, "c": c_value,
            "test_frac": test_frac, "seed": _resolve_seed(seed, None)}
    out = _out_dir(out)
    outputs, inputs = _do_train(args, out)
    fileio.write_manifest(os.path.join(out, "manifest.json"), "train", args,
                          inputs=inputs, outputs=outputs)


def _do_rank(args, out):
    data = ds.Dataset.load(args["dataset_path"])
    order, scores = mrmr.rank_features(data.x, data.y, k=args["k"])
    payload = {
        "dataset": args["dataset_path"],
        "ranking": [{"rank": i + 1, "index": int(j), "name": FEATURE_NAMES[j],
                     "score": float(s)} for i, (j, s) in enumerate(zip(order, scores))],
    }
    fileio.save_json(os.path.join(out, "ranking.json"), payload)
    return ({"ranking.json": os.path.join(out, "ranking.json")},
            {"dataset_path": args["dataset_path"]})


@main.command("rank")
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--k", type=int, default=None, help="Rank only the top k features.")
@click.option("--out", required=True, type=click.Path())
@_guarded
def rank_cmd(dataset_path, k, out):
    """Order features by relevance minus redundancy."""
    args = {"dataset_path": dataset_path, "k": k}
    out = _out_dir(out)
    outputs, inputs = _do_rank(args, out)
    fileio.write_manifest(os.path.join(out, "manifest.json"), "rank", args,
                          inputs=inputs, outputs=outputs)


def _do_evaluate(args, out):
    data = ds.Dataset.load(args["dataset_path"])
    model = svm.load_model(args["model_path"])
    _, test_idx = ds.train_test_split(data, args["test_frac"], args["seed"])
    cv_acc = []
    if args["cv_folds"] > 0:
        for tr, va in ds.kfold_indices(data.y, args["cv_folds"], args["seed"]):
            fold_model = svm.train_svm(data.x[tr], data.y[tr], kernel=model.kernel,
                                       c=model.c, seed=args["seed"])
            pred = svm.predict_steps(fold_model, data.x[va])
            cv_acc.append(metrics.accuracy(pred, data.y[va]))
    report = metrics.evaluate_model(model, data.x[test_idx], data.y[test_idx],
                                    cv_accuracies=cv_acc)
    fileio.save_json(os.path.join(out, "eval.json"), {
        "dataset": args["dataset_path"],
        "model": args["model_path"],
        "report": report.to_dict(),
    })
    return ({"eval.json": os.path.join(out, "eval.json")},
            {"dataset_path": args["dataset_path"], "model_path": args["model_path"]})


@main.command("evaluate")
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--cv-folds", type=int, default=5)
@click.option("--test-frac", type=float, default=0.2)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def evaluate_cmd(dataset_path, model_path, cv_folds, test_frac, seed, out):
    """Evaluate a trained classifier: accuracy, AuC, cross-validation."""
    args = {"dataset_path": dataset_path, "model_path": model_path,
            "cv_folds": cv_folds, "test_frac": test_frac,
            "seed": _resolve_seed(seed, None)}
    out = _out_dir(out)
    outputs, inputs = _do_evaluate(args, out)
    fileio.write_manifest(os.path.join(out, "manifest.json"), "evaluate", args,
                          inputs=inputs, outputs=outputs)


def _do_run_adaptive(args, out):
    cfg = ScenarioConfig.from_dict(args["config"])
    model = svm.load_model(args["model_path"])
    res = run_adaptive(cfg, model, hysteresis=args["hysteresis"])
    payload = {
        "config": args["config"],
        "model": args["model_path"],
        "hysteresis": args["hysteresis"],
        "metrics": _metrics_dict(res.metrics),
        "timeline": _timeline_list(res.timeline),
    }
    if args["compare"]:
        fine, coarse = min(CLASS_STEPS), max(CLASS_STEPS)
        comparison = {}
        for name, dt in (("fixed_fine", fine), ("fixed_coarse", coarse)):
            r = run_scenario(replace(cfg, dt=dt))
            comparison[name] = _metrics_dict(r.metrics)
        payload["comparison"] = comparison
    fileio.save_json(os.path.join(out, "result.json"), payload)
    return ({"result.json": os.path.join(out, "result.json")},
            {"model_path": args["model_path"]})


@main.command("run-adaptive")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--preset", default=None)
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--hysteresis", type=int, default=20)
@click.option("--dt0", type=float, default=None, help="Initial step override [s].")
@click.option("--compare", is_flag=True, default=False,
              help="Also run fixed steps at both classes for comparison.")
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def run_adaptive_cmd(config_path, preset, model_path, hysteresis, dt0, compare, seed, out):
    """Run the learned adaptive step policy."""
    cfg, cfg_dict = _resolve_config(config_path, preset, seed, {"dt": dt0})
    args = {"config": cfg_dict, "model_path": model_path,
            "hysteresis": hysteresis, "compare": compare}
    out = _out_dir(out)
    outputs, inputs = _do_run_adaptive(args, out)
    fileio.write_manifest(os.path.join(out, "manifest.json"), "run-adaptive", args,
                          inputs=inputs, outputs=outputs)


def _do_replay(args, out):
    cfg = ScenarioConfig.from_dict(args["config"])
    res = replay_log(cfg, args["imu_path"], args["aiding_path"])
    fileio.save_json(os.path.join(out, "result.json"), {
        "config": args["config"],
        "imu_log": args["imu_path"],
        "aiding_log": args["aiding_path"],
        "metrics": _metrics_dict(res.metrics),
        "timeline": _timeline_list(res.timeline),
    })
    return ({"result.json": os.path.join(out, "result.json")},
            {"imu_path": args["imu_path"], "aiding_path": args["aiding_path"]})


@main.command("replay")
@click.option("--imu", "imu_path", required=True, type=click.Path())
@click.option("--aiding", "aiding_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--preset", default=None)
@click.option("--dt", type=float, default=None, help="Replay step [s].")
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def replay_cmd(imu_path, aiding_path, config_path, preset, dt, seed, out):
    """Re-run the filter over exported logs."""
    cfg, cfg_dict = _resolve_config(config_path, preset, seed, {"dt": dt})
    args = {"config": cfg_dict, "imu_path": imu_path, "aiding_path": aiding_path}
    out = _out_dir(out)
    outputs, inputs = _do_replay(args, out)
    fileio.write_manifest(os.path.join(out, "manifest.json"), "replay", args,
                          inputs=inputs, outputs=outputs)


_RERUN_DISPATCH = {
    "simulate": _do_simulate,
    "sweep": _do_sweep,
    "gen-dataset": _do_gen_dataset,
    "train": _do_train,
    "rank": _do_rank,
    "evaluate": _do_evaluate,
    "run-adaptive": _do_run_adaptive,
    "replay": _do_replay,
}


@main.command("rerun")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--jobs", type=int, default=1)
@click.option("--out", required=True, type=click.Path())
@_guarded
def rerun_cmd(manifest_path, jobs, out):
    """Execute a manifest's recorded command again, byte for byte."""
    manifest = fileio.load_json(manifest_path)
    command = manifest.get("command")
    if command not in _RERUN_DISPATCH:
        raise ConfigError(f"manifest has no rerunnable command (got {command!r})")
    args = manifest["args"]
    for name, rec in manifest.get("inputs", {}).items():
        path = rec.get("path")
        if path is None or not os.path.exists(path):
            raise ConfigError(f"manifest input {name} missing at {path!r}")
        if fileio.sha256_file(path) != rec.get("sha256"):
            raise ConfigError(f"input {name} at {path} changed since the manifest")
    out = _out_dir(out)
    fn = _RERUN_DISPATCH[command]
    if command in ("sweep", "gen-dataset"):
        outputs, inputs = fn(args, out, jobs=jobs)
    else:
        outputs, inputs = fn(args, out)
    fileio.write_manifest(os.path.join(out, "manifest.json"), command, args,
                          inputs=inputs, outputs=outputs)


if __name__ == "__main__":
    main()
