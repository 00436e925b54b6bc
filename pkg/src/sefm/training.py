"""Training loop: when each neuron is corrected, and toward what time.

Per pattern, the correct class's neuron should fire first with a safety
margin over every other neuron.  A pattern whose correct neuron already
fires on time only triggers corrections of wrong neurons that crowd the
margin; a late (or silent) correct neuron is pulled earlier while the
crowding wrong neurons are pushed later.  Patterns violating nothing are
skipped, which is what makes training converge: an epoch with no change
ends it.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .config import NetworkConfig
from .dynamics import Network, OutputNeuron, response_matrix
from .encoding import SpikePattern
from .errors import ConfigError, InputError
from . import learning
from .rng import SplitMix64, derive_seed

log = logging.getLogger(__name__)


# -- scheduling ------------------------------------------------------------

def on_time_deadline(desired_time: float, deadline_rate: float,
                     spike_interval: float) -> float:
    """Latest firing time still treated as on schedule."""
    return desired_time + deadline_rate * (spike_interval - desired_time)


def margin_window(desired_time: float, margin_rate: float,
                  spike_interval: float) -> float:
    """Minimum lead the correct neuron must hold over every other neuron."""
    return margin_rate * (spike_interval - desired_time)


def ref_time_correct(actual_time: float, reference_rate: float,
                     desired_time: float) -> float:
    """Target for a late correct neuron: a step earlier, never before the goal."""
    return max(desired_time, (1.0 - reference_rate) * actual_time)


def ref_time_wrong(anchor_time: float, margin: float, t_max: float) -> float:
    """Target for a crowding wrong neuron: the margin past the anchor."""
    return min(anchor_time + margin, t_max)


# -- per-sample outcome ----------------------------------------------------

class Outcome(enum.Enum):
    """Which branch a training sample took. Exactly one per sample."""

    NO_SPIKES = "no_spikes"      # empty pattern, nothing to do
    INITIALIZED = "initialized"  # first pattern of its class
    SKIPPED = "skipped"          # no correction needed (or possible)
    ON_TIME = "on_time"          # correct neuron punctual, wrong ones pushed back
    LATE = "late"                # correct neuron pulled earlier, then wrong ones pushed


@dataclass
class SampleResult:
    outcome: Outcome
    updated_classes: tuple[int, ...] = ()
    # classes whose correction had no eligible spike and was dropped
    ineligible_classes: tuple[int, ...] = ()
    # what the network would have answered before any update; None when
    # the sample was never evaluated (initialization, empty pattern)
    predicted: int | None = None


class _WeightCache:
    """Sampled momentary weights per (sample, neuron), version-checked."""

    def __init__(self):
        self._store: dict[tuple[int, int], tuple[int, np.ndarray]] = {}

    def get(self, sample_idx: int, neuron: OutputNeuron, label: int,
            pattern: SpikePattern) -> np.ndarray:
        hit = self._store.get((sample_idx, label))
        if hit is not None and hit[0] == neuron.version:
            return hit[1]
        w = neuron.sample_weights(pattern.neuron_ids, pattern.times)
        self._store[(sample_idx, label)] = (neuron.version, w)
        return w


def process_sample(net: Network, pattern: SpikePattern, label: int,
                   cfg: NetworkConfig, *, sample_idx: int = -1,
                   eps_matrix: np.ndarray | None = None,
                   cache: _WeightCache | None = None) -> SampleResult:
    """Run one pattern through the decision procedure, mutating the network.

    eps_matrix and cache are optional reuse hooks for the epoch loop; the
    result is identical without them.
    """
    if not 0 <= label < net.class_count:
        raise InputError(f"label {label} outside 0..{net.class_count - 1}")
    if pattern.spike_count == 0:
        return SampleResult(Outcome.NO_SPIKES)
    sim = net.sim

    if net.neurons[label] is None:
        neuron = OutputNeuron(label, net.input_count, net.sigma)
        try:
            learning.initialize(neuron, pattern, cfg.desired_time, sim)
        except learning.NoEligibleSpikes:
            # nothing precedes the desired time; wait for a friendlier pattern
            return SampleResult(Outcome.SKIPPED, ineligible_classes=(label,))
        net.neurons[label] = neuron
        return SampleResult(Outcome.INITIALIZED, updated_classes=(label,))

    if cache is None:
        cache = _WeightCache()
    rows: list[np.ndarray | None] = [None] * net.class_count
    for j, nrn in enumerate(net.neurons):
        if nrn is not None:
            rows[j] = cache.get(sample_idx, nrn, j, pattern)
    activity = net.evaluate_pattern(pattern, eps_matrix=eps_matrix, weight_rows=rows)
    actual = np.where(np.isnan(activity.fire_times), sim.t_max, activity.fire_times)
    raced = np.where(np.isnan(activity.fire_times), np.inf, activity.fire_times)
    winner = int(np.argmin(raced))
    predicted = winner if np.isfinite(raced[winner]) else int(np.argmax(activity.peaks))

    deadline = on_time_deadline(cfg.desired_time, cfg.deadline_rate, cfg.spike_interval)
    margin = margin_window(cfg.desired_time, cfg.margin_rate, cfg.spike_interval)
    rivals = [j for j in range(net.class_count)
              if j != label and net.neurons[j] is not None]

    updated: list[int] = []
    ineligible: list[int] = []

    def correct_at(j: int, t_ref: float) -> None:
        neuron = net.neurons[j]
        try:
            step = learning.compute_update(
                neuron, pattern, t_ref, sim,
                weights=cache.get(sample_idx, neuron, j, pattern))
        except learning.NoEligibleSpikes:
            ineligible.append(j)
            return
        if learning.apply_update(neuron, step, cfg.learning_rate):
            updated.append(j)

    if actual[label] <= deadline:
        targets = [j for j in rivals if actual[j] - actual[label] < margin]
        if not targets:
            return SampleResult(Outcome.SKIPPED, predicted=predicted)
        t_wrong = ref_time_wrong(actual[label], margin, sim.t_max)
        for j in targets:
            correct_at(j, t_wrong)
        return SampleResult(Outcome.ON_TIME, tuple(updated), tuple(ineligible),
                            predicted=predicted)

    t_corr = ref_time_correct(actual[label], cfg.reference_rate, cfg.desired_time)
    correct_at(label, t_corr)
    t_wrong = ref_time_wrong(t_corr, margin, sim.t_max)
    for j in rivals:
        if actual[j] - t_corr < margin:
            correct_at(j, t_wrong)
    return SampleResult(Outcome.LATE, tuple(updated), tuple(ineligible),
                        predicted=predicted)


# -- epoch loop --------------------------------------------------------------

@dataclass
class EpochStats:
    epoch: int
    initialized: int = 0
    on_time: int = 0
    late: int = 0
    skipped: int = 0
    no_spikes: int = 0
    updates_correct: int = 0     # corrections applied to the labeled class
    updates_wrong: int = 0       # suppressions applied to rival classes
    ineligible_updates: int = 0
    evaluated: int = 0
    online_correct: int = 0

    @property
    def neuron_updates(self) -> int:
        return self.updates_correct + self.updates_wrong

    @property
    def train_accuracy(self) -> float:
        """Accuracy of the pre-update answer on the samples seen this epoch."""
        return self.online_correct / self.evaluated if self.evaluated else 0.0

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "initialized": self.initialized,
            "on_time": self.on_time,
            "late": self.late,
            "skipped": self.skipped,
            "no_spikes": self.no_spikes,
            "updates_correct": self.updates_correct,
            "updates_wrong": self.updates_wrong,
            "ineligible_updates": self.ineligible_updates,
            "train_accuracy": self.train_accuracy,
        }


@dataclass
class TrainResult:
    network: Network
    epochs_run: int
    converged: bool
    epoch_stats: list[EpochStats] = field(default_factory=list)
    wall_seconds: float = 0.0


def epoch_order(seed: int, epoch: int, n: int) -> list[int]:
    """Presentation order for one epoch; a pure function of (seed, epoch)."""
    return SplitMix64(derive_seed(seed, epoch)).permutation(n)


def build_network(cfg: NetworkConfig, class_count: int, input_count: int) -> Network:
    return Network(class_count, input_count, cfg.sigma, cfg.simulation(),
                   cfg.spike_interval)


def train(patterns: list[SpikePattern], labels: np.ndarray, cfg: NetworkConfig,
          class_count: int, seed: int = 0,
          net: Network | None = None) -> TrainResult:
    """Fit a network on encoded patterns.

    Runs up to cfg.max_epochs passes in a seed-derived shuffled order per
    epoch, stopping early after a pass that changes nothing.
    """
    if len(patterns) == 0:
        raise InputError("cannot train on an empty pattern list")
    if len(patterns) != len(labels):
        raise InputError("patterns and labels differ in length")
    present = set(int(v) for v in np.unique(np.asarray(labels)))
    absent = sorted(set(range(class_count)) - present)
    if absent:
        raise ConfigError(f"training data has no sample of class(es) {absent}")
    started = time.perf_counter()
    if net is None:
        net = build_network(cfg, class_count, patterns[0].neuron_count)
    sim = net.sim
    eps_matrices = [response_matrix(p, sim) for p in patterns]
    cache = _WeightCache()
    stats_log: list[EpochStats] = []
    converged = False
    epochs_run = 0
    warned_empty: set[int] = set()
    for epoch in range(cfg.max_epochs):
        stats = EpochStats(epoch=epoch)
        changed = 0
        for s in epoch_order(seed, epoch, len(patterns)):
            label = int(labels[s])
            result = process_sample(net, patterns[s], label, cfg,
                                    sample_idx=s, eps_matrix=eps_matrices[s],
                                    cache=cache)
            if result.outcome is Outcome.NO_SPIKES:
                stats.no_spikes += 1
                if s not in warned_empty:
                    warned_empty.add(s)
                    log.warning("sample %d encodes to zero spikes; it is skipped", s)
            elif result.outcome is Outcome.INITIALIZED:
                stats.initialized += 1
            elif result.outcome is Outcome.SKIPPED:
                stats.skipped += 1
            elif result.outcome is Outcome.ON_TIME:
                stats.on_time += 1
            else:
                stats.late += 1
            if result.predicted is not None:
                stats.evaluated += 1
                stats.online_correct += int(result.predicted == label)
            stats.updates_correct += int(label in result.updated_classes)
            stats.updates_wrong += sum(1 for j in result.updated_classes if j != label)
            stats.ineligible_updates += len(result.ineligible_classes)
            changed += len(result.updated_classes)
        stats_log.append(stats)
        epochs_run = epoch + 1
        if changed == 0:
            converged = True
            break
    return TrainResult(network=net, epochs_run=epochs_run, converged=converged,
                       epoch_stats=stats_log,
                       wall_seconds=time.perf_counter() - started)


# -- inference ---------------------------------------------------------------

def predict_one(net: Network, pattern: SpikePattern) -> int:
    """Earliest-firing class; if every neuron is silent, highest peak potential.

    Ties break toward the lowest class index either way.
    """
    activity = net.evaluate_pattern(pattern)
    times = np.where(np.isnan(activity.fire_times), np.inf, activity.fire_times)
    best = int(np.argmin(times))
    if np.isfinite(times[best]):
        return best
    return int(np.argmax(activity.peaks))


def predict(net: Network, patterns: list[SpikePattern]) -> np.ndarray:
    return np.array([predict_one(net, p) for p in patterns], dtype=np.int64)


def accuracy_score(predictions: np.ndarray, labels: np.ndarray) -> float:
    if len(predictions) == 0:
        raise InputError("no predictions to score")
    return float(np.mean(np.asarray(predictions) == np.asarray(labels)))


def evaluate(net: Network, patterns: list[SpikePattern], labels: np.ndarray,
             ) -> tuple[float, np.ndarray]:
    """Accuracy and [true, predicted] confusion counts on a labeled set."""
    from .data import confusion_matrix
    preds = predict(net, patterns)
    return (accuracy_score(preds, labels),
            confusion_matrix(labels, preds, net.class_count))
