"""Step-size policies: fixed, speed-threshold baseline, and learned.

A policy tells the simulation engine which mechanization step to use next.
Decisions are taken at the tuning cadence (by default once per aiding
interval); the returned step takes effect at the next mechanization cycle.
"""
from collections import deque

from .errors import ConfigError
from . import svm

#: Default hysteresis depth for the learned policy [decisions].
HYSTERESIS_DEPTH = 20


class FixedPolicy:
    """Constant mechanization step."""

    adaptive = False
    needs_features = False

    def __init__(self, dt):
        if dt <= 0:
            raise ConfigError("step size must be positive")
        self.dt = dt

    def initial_dt(self, cfg):
        return self.dt

    def decide(self, features, speed, active_dt):
        return self.dt


class SpeedThresholdPolicy:
    """Threshold rule: fast vehicle gets the fine step, slow the coarse one."""

    adaptive = True
    needs_features = False

    def __init__(self, fine_dt, coarse_dt, v_thresh):
        if fine_dt >= coarse_dt:
            raise ConfigError("fine step must be smaller than coarse step")
        if v_thresh < 0:
            raise ConfigError("speed threshold must be non-negative")
        self.fine_dt = fine_dt
        self.coarse_dt = coarse_dt
        self.v_thresh = v_thresh

    @property
    def class_steps(self):
        return (self.fine_dt, self.coarse_dt)

    def initial_dt(self, cfg):
        return self.coarse_dt

    def decide(self, features, speed, active_dt):
        return baseline_step(speed, self.v_thresh, self.fine_dt, self.coarse_dt)


def baseline_step(speed, v_thresh, fine_dt, coarse_dt):
    """Speed-threshold step selection."""
    return fine_dt if speed > v_thresh else coarse_dt


class LearnedPolicy:
    """Classifier-driven step selection with switching hysteresis.

    A switch to a different step class is committed only when the previous
    ``hysteresis`` predictions (a full history window) unanimously agree
    with the new prediction; depth 0 disables hysteresis and switches
    immediately. Warm-up windows (incomplete history buffer) produce no
    decision.
    """

    adaptive = True
    needs_features = True

    def __init__(self, model, hysteresis=HYSTERESIS_DEPTH):
        if hysteresis < 0:
            raise ConfigError("hysteresis depth must be non-negative")
        self.model = model
        self.hysteresis = hysteresis
        maxlen = hysteresis if hysteresis > 0 else HYSTERESIS_DEPTH
        self._history = deque(maxlen=maxlen)
        self.switches = 0

    @property
    def class_steps(self):
        return tuple(sorted(self.model.class_map.values()))

    def initial_dt(self, cfg):
        return cfg.dt

    def decide(self, features, speed, active_dt):
        if features is None or features.warmup:
            return active_dt
        pred = svm.predict(self.model, features.values)
        if pred != active_dt:
            if self.hysteresis == 0:
                agreed = True
            else:
                agreed = len(self._history) == self.hysteresis and all(
                    h == pred for h in self._history
                )
            if agreed:
                self._history.append(pred)
                self.switches += 1
                return pred
        self._history.append(pred)
        return active_dt
