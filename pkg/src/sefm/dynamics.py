"""Time-varying synaptic efficacies, postsynaptic potentials, firing times.

A synapse's weight is a function of time: a sum of Gaussians of shared
width sigma, each centered at a presynaptic spike time that once carried
a weight update.  Sampling is exact evaluation of that sum.  An output
neuron owns one efficacy function per input neuron plus a firing
threshold; it fires at the first grid time where its potential reaches
the threshold (time-to-first-spike, at most one spike per pattern).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .encoding import TIME_QUANTUM, EncoderConfig, SpikePattern
from .errors import ConfigError, InputError

MODEL_FORMAT = "sefm-model/1"


@dataclass(frozen=True)
class SimulationConfig:
    """Postsynaptic simulation settings.

    tau is the spike-response time constant (ms), t_max the end of the
    postsynaptic interval (ms), dt the threshold-search grid step (ms).
    """

    tau: float = 3.0
    t_max: float = 8.0
    dt: float = 0.01

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.t_max <= 0:
            raise ConfigError("t_max must be positive")

    def grid(self) -> np.ndarray:
        """Search grid {0, dt, 2dt, ..., t_max}."""
        n = int(round(self.t_max / self.dt))
        return np.arange(n + 1, dtype=np.float64) * self.dt


def epsilon(t, tau: float):
    """Spike response kernel (t/tau) * exp(1 - t/tau) for t > 0, else 0.

    Unit peak exactly at t = tau.  The gate is strict: a contribution at
    its own spike instant (t = 0) is zero.  Accepts scalars or arrays.
    """
    if tau <= 0:
        raise InputError("tau must be positive")
    arr = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(arr)
    mask = arr > 0
    scaled = arr[mask] / tau
    out[mask] = scaled * np.exp(1.0 - scaled)
    if np.ndim(t) == 0:
        return float(out)
    return out


class EfficacyFunction:
    """One synapse's time-varying weight: sum of amplitude-scaled Gaussians.

    Terms are keyed by center snapped to the encoding time grid, so
    repeated updates at the same presynaptic spike time merge into one
    amplitude instead of growing the term list every epoch.  Amplitudes
    may be positive or negative.
    """

    __slots__ = ("sigma", "_terms", "_centers", "_amps")

    def __init__(self, sigma: float):
        if sigma <= 0:
            raise ConfigError("sigma must be positive")
        self.sigma = float(sigma)
        self._terms: dict[int, float] = {}
        self._centers: Optional[np.ndarray] = None
        self._amps: Optional[np.ndarray] = None

    @property
    def term_count(self) -> int:
        return len(self._terms)

    def terms(self) -> list[tuple[float, float]]:
        """(center, amplitude) pairs sorted by center."""
        return [(k * TIME_QUANTUM, a) for k, a in sorted(self._terms.items())]

    def add_term(self, center: float, amplitude: float) -> None:
        key = int(round(center / TIME_QUANTUM))
        self._terms[key] = self._terms.get(key, 0.0) + float(amplitude)
        self._centers = None
        self._amps = None

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._centers is None:
            keys = sorted(self._terms)
            self._centers = np.array([k * TIME_QUANTUM for k in keys], dtype=np.float64)
            self._amps = np.array([self._terms[k] for k in keys], dtype=np.float64)
        return self._centers, self._amps

    def sample(self, t: float) -> float:
        """Exact Gaussian-sum value at time t; 0 with no terms."""
        centers, amps = self.arrays()
        if centers.size == 0:
            return 0.0
        d = (t - centers) / self.sigma
        return float(amps @ np.exp(-0.5 * d * d))


def sample_weight(efficacy: EfficacyFunction, t: float, spike_interval: float) -> float:
    """Momentary weight w(t); t must lie in the presynaptic window [0, T]."""
    if not 0.0 <= t <= spike_interval:
        raise InputError(f"sample time {t} outside [0, {spike_interval}]")
    return efficacy.sample(t)


class OutputNeuron:
    """One class's output neuron: threshold plus per-input efficacy functions.

    ``version`` increments on every mutation so callers can cache sampled
    weights safely.
    """

    __slots__ = ("class_label", "threshold", "efficacies", "version",
                 "_flat_centers", "_flat_amps", "_offsets")

    def __init__(self, class_label: int, input_count: int, sigma: float, threshold: float = 0.0):
        self.class_label = int(class_label)
        self.threshold = float(threshold)
        self.efficacies = [EfficacyFunction(sigma) for _ in range(input_count)]
        self.version = 0
        self._flat_centers: Optional[np.ndarray] = None
        self._flat_amps: Optional[np.ndarray] = None
        self._offsets: Optional[np.ndarray] = None

    @property
    def input_count(self) -> int:
        return len(self.efficacies)

    @property
    def sigma(self) -> float:
        return self.efficacies[0].sigma if self.efficacies else 0.0

    def set_threshold(self, value: float) -> None:
        self.threshold = float(value)
        self.version += 1

    def add_terms(self, neuron_ids: Sequence[int], centers: Sequence[float],
                  amplitudes: Sequence[float]) -> None:
        """Add one Gaussian term per (input neuron, center, amplitude) triple."""
        for i, c, a in zip(neuron_ids, centers, amplitudes):
            self.efficacies[int(i)].add_term(float(c), float(a))
        self.version += 1
        self._flat_centers = None

    def _flatten(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._flat_centers is None:
            per_syn = [eff.arrays() for eff in self.efficacies]
            counts = np.array([c.size for c, _ in per_syn], dtype=np.int64)
            offsets = np.zeros(len(per_syn) + 1, dtype=np.int64)
            np.cumsum(counts, out=offsets[1:])
            if offsets[-1]:
                self._flat_centers = np.concatenate([c for c, _ in per_syn])
                self._flat_amps = np.concatenate([a for _, a in per_syn])
            else:
                self._flat_centers = np.zeros(0)
                self._flat_amps = np.zeros(0)
            self._offsets = offsets
        return self._flat_centers, self._flat_amps, self._offsets

    def sample_weights(self, neuron_ids: np.ndarray, times: np.ndarray) -> np.ndarray:
        """Momentary weight of each (input neuron, time) spike, vectorized.

        One pass over all Gaussian terms of all addressed synapses; the
        ragged synapse->terms mapping is expanded with repeat/cumsum
        instead of a per-spike Python loop.
        """
        centers, amps, offsets = self._flatten()
        n = len(neuron_ids)
        if n == 0 or centers.size == 0:
            return np.zeros(n)
        ids = np.asarray(neuron_ids, dtype=np.int64)
        starts = offsets[ids]
        counts = offsets[ids + 1] - starts
        total = int(counts.sum())
        if total == 0:
            return np.zeros(n)
        spike_of_term = np.repeat(np.arange(n), counts)
        ends = np.cumsum(counts)
        term_idx = np.arange(total) - np.repeat(ends - counts, counts) + np.repeat(starts, counts)
        d = (np.repeat(np.asarray(times, dtype=np.float64), counts) - centers[term_idx])
        sigma = self.efficacies[0].sigma
        vals = amps[term_idx] * np.exp(-0.5 * (d / sigma) ** 2)
        return np.bincount(spike_of_term, weights=vals, minlength=n)


def response_matrix(pattern: SpikePattern, sim: SimulationConfig,
                    grid: Optional[np.ndarray] = None) -> np.ndarray:
    """Kernel response of each spike at each grid time: (spikes, grid)."""
    if grid is None:
        grid = sim.grid()
    return epsilon(grid[None, :] - pattern.times[:, None], sim.tau)


def potential(neuron: OutputNeuron, pattern: SpikePattern, t: float,
              sim: SimulationConfig) -> float:
    """Postsynaptic potential v(t) = sum over spikes of w(t_k) * eps(t - t_k)."""
    if pattern.spike_count == 0:
        return 0.0
    w = neuron.sample_weights(pattern.neuron_ids, pattern.times)
    return float(w @ epsilon(t - pattern.times, sim.tau))


def fire_time(neuron: OutputNeuron, pattern: SpikePattern,
              sim: SimulationConfig) -> Optional[float]:
    """Earliest grid time with v(t) >= threshold, or None if never crossed."""
    if pattern.spike_count == 0:
        return None
    w = neuron.sample_weights(pattern.neuron_ids, pattern.times)
    v = w @ response_matrix(pattern, sim)
    hit = v >= neuron.threshold
    if not hit.any():
        return None
    return float(np.argmax(hit) * sim.dt)


@dataclass
class PatternActivity:
    """Per-class firing summary of one pattern.

    fire_times holds NaN for silent (or uninitialized) neurons; peaks
    holds -inf for uninitialized ones so the silent-fallback argmax can
    never pick them.
    """

    fire_times: np.ndarray
    peaks: np.ndarray


class Network:
    """Ordered bank of output neurons, one per class label 0..p-1."""

    def __init__(self, class_count: int, input_count: int, sigma: float,
                 sim: SimulationConfig, spike_interval: float):
        if class_count < 1:
            raise ConfigError("class_count must be >= 1")
        if sim.t_max <= spike_interval:
            raise ConfigError("t_max must exceed the presynaptic interval")
        self.class_count = class_count
        self.input_count = input_count
        self.sigma = float(sigma)
        self.sim = sim
        self.spike_interval = float(spike_interval)
        self.neurons: list[Optional[OutputNeuron]] = [None] * class_count

    def initialized(self, label: Optional[int] = None) -> bool:
        if label is None:
            return all(n is not None for n in self.neurons)
        return self.neurons[label] is not None

    def evaluate_pattern(self, pattern: SpikePattern, *,
                         eps_matrix: Optional[np.ndarray] = None,
                         weight_rows: Optional[Sequence[Optional[np.ndarray]]] = None,
                         ) -> PatternActivity:
        """Fire times and peak potentials of every initialized neuron.

        eps_matrix / weight_rows let a training loop substitute cached
        pieces; results are identical to the uncached path.
        """
        if eps_matrix is None:
            eps_matrix = response_matrix(pattern, self.sim)
        n_grid = eps_matrix.shape[1]
        fire_times = np.full(self.class_count, np.nan)
        peaks = np.full(self.class_count, -np.inf)
        for j, neuron in enumerate(self.neurons):
            if neuron is None:
                continue
            w = weight_rows[j] if weight_rows is not None and weight_rows[j] is not None \
                else neuron.sample_weights(pattern.neuron_ids, pattern.times)
            v = w @ eps_matrix if pattern.spike_count else np.zeros(n_grid)
            peaks[j] = v.max()
            hit = v >= neuron.threshold
            if hit.any():
                fire_times[j] = float(np.argmax(hit) * self.sim.dt)
        return PatternActivity(fire_times=fire_times, peaks=peaks)


# ---------------------------------------------------------------------------
# Serialization: flat, versioned JSON with exact float round-trip.
# ---------------------------------------------------------------------------

def model_to_dict(net: Network, encoder: Optional[EncoderConfig] = None) -> dict:
    neurons = []
    for neuron in net.neurons:
        if neuron is None:
            neurons.append(None)
            continue
        neurons.append({
            "class_label": neuron.class_label,
            "threshold": neuron.threshold,
            "synapses": [[[c, a] for c, a in eff.terms()] for eff in neuron.efficacies],
        })
    doc = {
        "format": MODEL_FORMAT,
        "sigma": net.sigma,
        "spike_interval": net.spike_interval,
        "simulation": {"tau": net.sim.tau, "t_max": net.sim.t_max, "dt": net.sim.dt},
        "input_count": net.input_count,
        "class_count": net.class_count,
        "neurons": neurons,
        "encoder": None if encoder is None else {
            "receptive_field_count": encoder.receptive_field_count,
            "overlap": encoder.overlap,
            "spike_interval": encoder.spike_interval,
            "response_cutoff": encoder.response_cutoff,
            "feature_ranges": [list(r) for r in encoder.feature_ranges],
        },
    }
    return doc


def model_from_dict(doc: dict) -> tuple[Network, Optional[EncoderConfig]]:
    if doc.get("format") != MODEL_FORMAT:
        raise InputError(f"unsupported model format: {doc.get('format')!r}")
    sim = SimulationConfig(**doc["simulation"])
    net = Network(doc["class_count"], doc["input_count"], doc["sigma"], sim,
                  doc["spike_interval"])
    for j, entry in enumerate(doc["neurons"]):
        if entry is None:
            continue
        neuron = OutputNeuron(entry["class_label"], doc["input_count"], doc["sigma"],
                              threshold=entry["threshold"])
        for i, terms in enumerate(entry["synapses"]):
            for c, a in terms:
                neuron.efficacies[i].add_term(c, a)
        net.neurons[j] = neuron
    enc = None
    if doc.get("encoder") is not None:
        e = doc["encoder"]
        enc = EncoderConfig(
            receptive_field_count=e["receptive_field_count"],
            overlap=e["overlap"],
            spike_interval=e["spike_interval"],
            response_cutoff=e["response_cutoff"],
            feature_ranges=tuple((float(lo), float(hi)) for lo, hi in e["feature_ranges"]),
        )
    return net, enc


def model_to_json_bytes(net: Network, encoder: Optional[EncoderConfig] = None) -> bytes:
    """Canonical byte encoding; identical models produce identical bytes."""
    return json.dumps(model_to_dict(net, encoder), sort_keys=True,
                      separators=(",", ":")).encode("ascii")


def save_model(path, net: Network, encoder: Optional[EncoderConfig] = None) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_json_bytes(net, encoder))


def load_model(path) -> tuple[Network, Optional[EncoderConfig]]:
    with open(path, "r", encoding="ascii") as fh:
        return model_from_dict(json.load(fh))
