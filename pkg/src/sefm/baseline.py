"""Reference classifier with plain scalar weights (no time variation).

Same architecture, same correction schedule, but each synapse carries a
single number instead of a function of time.  Kept deliberately separate
from the main implementation — simple arrays and explicit arithmetic —
so the two can be compared against each other: with a very wide Gaussian
the main model should degenerate to exactly this.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import NetworkConfig
from .encoding import SpikePattern
from .errors import InputError
from .training import (epoch_order, margin_window, on_time_deadline,
                       ref_time_correct, ref_time_wrong)


def _kernel(t: np.ndarray, tau: float) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = (t[pos] / tau) * np.exp(1.0 - t[pos] / tau)
    return out


@dataclass
class ConstantModel:
    class_count: int
    input_count: int
    weights: np.ndarray = field(init=False)
    thresholds: np.ndarray = field(init=False)
    initialized: np.ndarray = field(init=False)

    def __post_init__(self):
        self.weights = np.zeros((self.class_count, self.input_count))
        self.thresholds = np.zeros(self.class_count)
        self.initialized = np.zeros(self.class_count, dtype=bool)


def _fire_time(model: ConstantModel, j: int, pattern: SpikePattern,
               cfg: NetworkConfig) -> float | None:
    n = int(round(cfg.t_max / cfg.dt))
    grid = np.arange(n + 1, dtype=np.float64) * cfg.dt
    w = model.weights[j, pattern.neuron_ids]
    v = w @ _kernel(grid[None, :] - pattern.times[:, None], cfg.tau)
    hit = v >= model.thresholds[j]
    if not hit.any():
        return None
    return float(np.argmax(hit) * cfg.dt)


def _peak(model: ConstantModel, j: int, pattern: SpikePattern,
          cfg: NetworkConfig) -> float:
    n = int(round(cfg.t_max / cfg.dt))
    grid = np.arange(n + 1, dtype=np.float64) * cfg.dt
    w = model.weights[j, pattern.neuron_ids]
    v = w @ _kernel(grid[None, :] - pattern.times[:, None], cfg.tau)
    return float(v.max())


def _initialize(model: ConstantModel, label: int, pattern: SpikePattern,
                cfg: NetworkConfig) -> bool:
    eps = _kernel(cfg.desired_time - pattern.times, cfg.tau)
    total = eps.sum()
    if total <= 0.0:
        return False
    u = eps / total
    np.add.at(model.weights[label], pattern.neuron_ids, u)
    model.thresholds[label] = float(u @ eps)
    model.initialized[label] = True
    return True


def _update(model: ConstantModel, j: int, pattern: SpikePattern, t_ref: float,
            cfg: NetworkConfig) -> bool:
    """Move v_j(t_ref) onto the threshold; returns whether anything changed."""
    eps = _kernel(t_ref - pattern.times, cfg.tau)
    total = eps.sum()
    if total <= 0.0:
        return False
    u = eps / total
    w = model.weights[j, pattern.neuron_ids]
    dv = model.thresholds[j] - float(w @ eps)
    z = np.where(u > w, u - w, 0.0)
    weighted = z * eps
    share_total = weighted.sum()
    m = u if share_total <= 0.0 else weighted / share_total
    delta = np.zeros_like(m)
    nz = m != 0.0
    delta[nz] = m[nz] * dv / eps[nz]
    scaled = cfg.learning_rate * delta
    if not (scaled != 0.0).any():
        return False
    np.add.at(model.weights[j], pattern.neuron_ids, scaled)
    return True


def train_constant(patterns: list[SpikePattern], labels: np.ndarray,
                   cfg: NetworkConfig, class_count: int,
                   seed: int = 0) -> ConstantModel:
    if len(patterns) == 0:
        raise InputError("cannot train on an empty pattern list")
    model = ConstantModel(class_count, patterns[0].neuron_count)
    deadline = on_time_deadline(cfg.desired_time, cfg.deadline_rate, cfg.spike_interval)
    margin = margin_window(cfg.desired_time, cfg.margin_rate, cfg.spike_interval)
    for epoch in range(cfg.max_epochs):
        changed = 0
        for s in epoch_order(seed, epoch, len(patterns)):
            pattern, label = patterns[s], int(labels[s])
            if pattern.spike_count == 0:
                continue
            if not model.initialized[label]:
                if _initialize(model, label, pattern, cfg):
                    changed += 1
                continue
            actual = np.full(class_count, cfg.t_max)
            for j in range(class_count):
                if model.initialized[j]:
                    t = _fire_time(model, j, pattern, cfg)
                    if t is not None:
                        actual[j] = t
            rivals = [j for j in range(class_count)
                      if j != label and model.initialized[j]]
            if actual[label] <= deadline:
                t_wrong = ref_time_wrong(actual[label], margin, cfg.t_max)
                for j in rivals:
                    if actual[j] - actual[label] < margin:
                        changed += _update(model, j, pattern, t_wrong, cfg)
            else:
                t_corr = ref_time_correct(actual[label], cfg.reference_rate,
                                          cfg.desired_time)
                changed += _update(model, label, pattern, t_corr, cfg)
                t_wrong = ref_time_wrong(t_corr, margin, cfg.t_max)
                for j in rivals:
                    if actual[j] - t_corr < margin:
                        changed += _update(model, j, pattern, t_wrong, cfg)
        if changed == 0:
            break
    return model


def predict_constant(model: ConstantModel, patterns: list[SpikePattern],
                     cfg: NetworkConfig) -> np.ndarray:
    out = np.zeros(len(patterns), dtype=np.int64)
    for idx, pattern in enumerate(patterns):
        times = np.full(model.class_count, np.inf)
        peaks = np.full(model.class_count, -np.inf)
        for j in range(model.class_count):
            if not model.initialized[j]:
                continue
            if pattern.spike_count == 0:
                peaks[j] = 0.0
                continue
            t = _fire_time(model, j, pattern, cfg)
            if t is not None:
                times[j] = t
            peaks[j] = _peak(model, j, pattern, cfg)
        best = int(np.argmin(times))
        out[idx] = best if np.isfinite(times[best]) else int(np.argmax(peaks))
    return out
