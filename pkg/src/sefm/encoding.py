"""Gaussian receptive-field population encoding of real-valued features.

Each feature is covered by M overlapping Gaussian fields.  A field's
response in [0, 1] is mapped linearly to a firing latency: response 1
fires at 0 ms, weaker responses fire later, and responses below a cutoff
stay silent.  Every (feature, field) pair is one input neuron, so an
F-feature problem becomes F*M input neurons each firing at most once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError

# Firing times are snapped to this grid (ms) so encoded patterns are
# bit-identical across platforms and efficacy-function centers can be
# merged by exact key.
TIME_QUANTUM = 0.001


@dataclass(frozen=True)
class EncoderConfig:
    """Fitted settings of the population encoder.

    Attributes
    ----------
    receptive_field_count : int
        Fields per feature (M).  Must be >= 3: center/width formulas
        divide by M - 2.
    overlap : float
        Overlap constant gamma controlling field width.
    spike_interval : float
        Presynaptic spike window T in ms; all spikes land in [0, T].
    response_cutoff : float
        Responses below this value emit no spike.
    feature_ranges : tuple[tuple[float, float], ...]
        Per-feature (min, max) taken from training data.
    """

    receptive_field_count: int
    overlap: float
    spike_interval: float
    response_cutoff: float
    feature_ranges: tuple[tuple[float, float], ...]

    @property
    def feature_count(self) -> int:
        return len(self.feature_ranges)

    @property
    def neuron_count(self) -> int:
        return self.feature_count * self.receptive_field_count


@dataclass(frozen=True)
class SpikePattern:
    """Presynaptic spike times of one encoded sample.

    Spikes are stored flat, sorted by (neuron, time); ``neuron_ids[k]``
    fires at ``times[k]``.  A neuron may appear zero or more times, all
    times lie in [0, T].
    """

    neuron_count: int
    neuron_ids: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.neuron_ids, dtype=np.int64)
        ts = np.asarray(self.times, dtype=np.float64)
        if ids.shape != ts.shape or ids.ndim != 1:
            raise InputError("neuron_ids and times must be 1-d arrays of equal length")
        order = np.lexsort((ts, ids))
        ids = ids[order]
        ts = ts[order]
        ids.setflags(write=False)
        ts.setflags(write=False)
        object.__setattr__(self, "neuron_ids", ids)
        object.__setattr__(self, "times", ts)
        if ids.size and (ids.min() < 0 or ids.max() >= self.neuron_count):
            raise InputError("neuron id outside [0, neuron_count)")

    @property
    def spike_count(self) -> int:
        return int(self.times.size)

    def times_by_neuron(self) -> list[list[float]]:
        """Per-neuron ascending spike-time lists (empty list = silent)."""
        out: list[list[float]] = [[] for _ in range(self.neuron_count)]
        for i, t in zip(self.neuron_ids, self.times):
            out[i].append(float(t))
        return out

    def spike_keys(self) -> list[tuple[int, int]]:
        """(neuron, within-neuron order) key for each flat spike index."""
        keys = []
        seen: dict[int, int] = {}
        for i in self.neuron_ids:
            k = seen.get(int(i), 0)
            keys.append((int(i), k))
            seen[int(i)] = k + 1
        return keys


def quantize_time(t: float) -> float:
    """Snap a time (ms) to the encoding grid."""
    return float(np.rint(t / TIME_QUANTUM)) * TIME_QUANTUM


def fit_ranges(
    dataset,
    receptive_field_count: int = 6,
    overlap: float = 0.7,
    spike_interval: float = 3.0,
    response_cutoff: float = 0.1,
) -> EncoderConfig:
    """Learn per-feature (min, max) from training data and build a config.

    A constant feature gets its range widened to (v - 0.5, v + 0.5) so the
    field widths stay positive; every sample then maps identically, which
    is the best a constant feature can do.
    """
    x = np.asarray(dataset, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ConfigError("fit_ranges needs a non-empty 2-d dataset")
    if receptive_field_count < 3:
        raise ConfigError("receptive_field_count must be >= 3 (width formula divides by M-2)")
    if overlap <= 0:
        raise ConfigError("overlap must be positive")
    if not 0.0 <= response_cutoff < 1.0:
        raise ConfigError("response_cutoff must lie in [0, 1)")
    if spike_interval <= 0:
        raise ConfigError("spike_interval must be positive")
    ranges = []
    for f in range(x.shape[1]):
        col = x[:, f]
        col = col[~np.isnan(col)]
        if col.size == 0:
            raise ConfigError(f"feature {f} has no finite values")
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        ranges.append((lo, hi))
    return EncoderConfig(
        receptive_field_count=receptive_field_count,
        overlap=overlap,
        spike_interval=spike_interval,
        response_cutoff=response_cutoff,
        feature_ranges=tuple(ranges),
    )


def field_centers_widths(cfg: EncoderConfig, feature: int) -> tuple[np.ndarray, float]:
    """Centers mu_h and shared width s of one feature's receptive fields.

    For fields h = 1..M over range [lo, hi]:

        mu_h = lo + (2h - 3)/2 * (hi - lo)/(M - 2)
        s    = (1/gamma) * (hi - lo)/(M - 2)

    The outermost centers fall slightly outside [lo, hi] so the boundary
    values are still covered by a strong response.
    """
    lo, hi = cfg.feature_ranges[feature]
    m = cfg.receptive_field_count
    span = (hi - lo) / (m - 2)
    h = np.arange(1, m + 1, dtype=np.float64)
    centers = lo + (2.0 * h - 3.0) / 2.0 * span
    width = span / cfg.overlap
    return centers, width


def receptive_field_response(x: float, feature: int, field_index: int, cfg: EncoderConfig) -> float:
    """Response in [0, 1] of field ``field_index`` (1-based) to value ``x``.

    Plain Gaussian exp(-(x - mu)^2 / (2 s^2)): exactly 1 at the center,
    exp(-1/2) one width away.  Values outside the fitted range are used
    as-is; the response just decays smoothly.
    """
    if not 1 <= field_index <= cfg.receptive_field_count:
        raise InputError(f"field_index {field_index} outside 1..{cfg.receptive_field_count}")
    centers, width = field_centers_widths(cfg, feature)
    mu = centers[field_index - 1]
    d = (x - mu) / width
    return float(np.exp(-0.5 * d * d))


def encode(features, cfg: EncoderConfig) -> SpikePattern:
    """Encode one feature vector into a spike pattern.

    Input neuron f*M + (h-1) carries field h of feature f and fires at
    t = T * (1 - response), snapped to the time grid, whenever the
    response reaches the cutoff.  Stronger stimulus means earlier spike;
    sub-cutoff fields stay silent, so a neuron emits 0 or 1 spikes.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (cfg.feature_count,):
        raise InputError(
            f"expected {cfg.feature_count} features, got shape {x.shape}"
        )
    m = cfg.receptive_field_count
    ids = []
    times = []
    for f in range(cfg.feature_count):
        centers, width = field_centers_widths(cfg, f)
        d = (x[f] - centers) / width
        resp = np.exp(-0.5 * d * d)
        fired = resp >= cfg.response_cutoff
        t = np.rint(cfg.spike_interval * (1.0 - resp[fired]) / TIME_QUANTUM) * TIME_QUANTUM
        ids.append(np.flatnonzero(fired) + f * m)
        times.append(t)
    return SpikePattern(
        neuron_count=cfg.neuron_count,
        neuron_ids=np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64),
        times=np.concatenate(times) if times else np.zeros(0),
    )


def encode_dataset(features_matrix, cfg: EncoderConfig) -> list[SpikePattern]:
    """Encode every row of a feature matrix."""
    x = np.asarray(features_matrix, dtype=np.float64)
    return [encode(row, cfg) for row in x]
