"""Binary soft-margin SVM trained by dual coordinate descent.

Supports a linear kernel and an explicit second-degree polynomial feature
map equivalent to the kernel (x'z + 1)^2, so decisions stay a single dot
product at runtime. Inputs are z-scored with statistics from the training
split; a constant column appended after standardization carries the bias.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

KERNELS = ("linear", "poly2")

#: Projected-gradient stopping threshold for the dual solver.
DEFAULT_TOL = 1e-4
DEFAULT_C = 1.0
MAX_PASSES = 1000


@dataclass
class SvmModel:
    kernel: str
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray
    pos_step: float  # step class on the positive side of the margin
    neg_step: float  # step class on the negative side (wins ties)
    c: float = DEFAULT_C
    meta: dict = field(default_factory=dict)

    @property
    def class_map(self):
        return {1: self.pos_step, -1: self.neg_step}


def _poly2_map(z):
    """Explicit feature map of (x'z + 1)^2 for standardized rows ``z``.

    Column order: sqrt(2)*z_i*z_j for i<j (upper-triangle order), z_i^2,
    sqrt(2)*z_i, constant 1.
    """
    n, d = z.shape
    iu, ju = np.triu_indices(d, k=1)
    cross = z[:, iu] * z[:, ju] * math.sqrt(2.0)
    return np.hstack([cross, z * z, z * math.sqrt(2.0), np.ones((n, 1))])


def _feature_map(kernel, z):
    if kernel == "poly2":
        return _poly2_map(z)
    return np.hstack([z, np.ones((z.shape[0], 1))])


def _standardize(x, mean, std):
    return (x - mean) / std


def train_svm(x, y_steps, kernel="poly2", c=DEFAULT_C, tol=DEFAULT_TOL,
              max_passes=MAX_PASSES, seed=0):
    """Fit the classifier on raw feature rows ``x`` labeled with step sizes.

    The smaller step class maps to the positive margin side. Standardization
    statistics come from ``x`` itself, so pass the training split only.
    """
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}")
    x = np.asarray(x, dtype=float)
    y_steps = np.asarray(y_steps, dtype=float)
    classes = np.unique(y_steps)
    if classes.size != 2:
        raise ConfigError("training labels must contain exactly two step classes")
    pos_step, neg_step = classes[0], classes[1]
    y = np.where(y_steps == pos_step, 1.0, -1.0)

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    phi = _feature_map(kernel, _standardize(x, mean, std))

    n = phi.shape[0]
    q_diag = np.einsum("ij,ij->i", phi, phi)
    q_diag = np.where(q_diag <= 0, 1.0, q_diag)
    alpha = np.zeros(n)
    w = np.zeros(phi.shape[1])
    rng = np.random.default_rng(seed)
    order = np.arange(n)
    passes = 0
    for passes in range(1, max_passes + 1):
        rng.shuffle(order)
        max_pg = 0.0
        for i in order:
            g = y[i] * float(phi[i] @ w) - 1.0
            a = alpha[i]
            if a == 0.0:
                pg = min(g, 0.0)
            elif a == c:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                max_pg = max(max_pg, abs(pg))
                new_a = min(max(a - g / q_diag[i], 0.0), c)
                if new_a != a:
                    w += (new_a - a) * y[i] * phi[i]
                    alpha[i] = new_a
        if max_pg <= tol:
            break

    return SvmModel(
        kernel=kernel,
        weights=w[:-1].copy(),
        bias=float(w[-1]),
        mean=mean,
        std=std,
        pos_step=float(pos_step),
        neg_step=float(neg_step),
        c=c,
        meta={"n_train": int(n), "passes": int(passes), "tol": tol, "seed": seed},
    )


def decision_function(model, x):
    """Signed margin scores for raw feature rows ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    phi = _feature_map(model.kernel, _standardize(x, model.mean, model.std))
    return phi[:, :-1] @ model.weights + model.bias


def predict_steps(model, x):
    """Predicted step class per row; ties go to the negative (coarse) class."""
    scores = decision_function(model, x)
    return np.where(scores > 0, model.pos_step, model.neg_step)


def predict(model, features):
    """Predicted step class for a single feature vector."""
    return float(predict_steps(model, np.asarray(features, dtype=float).reshape(1, -1))[0])


def constant_model(step, n_features=16, other_step=None):
    """Model whose prediction is always ``step``; used for replay checks."""
    other = other_step if other_step is not None else step
    return SvmModel(
        kernel="linear",
        weights=np.zeros(n_features),
        bias=-1.0,
        mean=np.zeros(n_features),
        std=np.ones(n_features),
        pos_step=float(other),
        neg_step=float(step),
        c=DEFAULT_C,
        meta={"constant": True},
    )


def save_model(model, path):
    payload = {
        "kernel": model.kernel,
        "weights": [float(v) for v in model.weights],
        "bias": model.bias,
        "mean": [float(v) for v in model.mean],
        "std": [float(v) for v in model.std],
        "class_map": {"1": model.pos_step, "-1": model.neg_step},
        "C": model.c,
        "meta": model.meta,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        payload = json.load(fh)
    try:
        return SvmModel(
            kernel=payload["kernel"],
            weights=np.asarray(payload["weights"], dtype=float),
            bias=float(payload["bias"]),
            mean=np.asarray(payload["mean"], dtype=float),
            std=np.asarray(payload["std"], dtype=float),
            pos_step=float(payload["class_map"]["1"]),
            neg_step=float(payload["class_map"]["-1"]),
            c=float(payload.get("C", DEFAULT_C)),
            meta=payload.get("meta", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model file {path}: {exc}") from None
