import numpy as np
import pytest

from sefm.dynamics import OutputNeuron
from sefm.encoding import TIME_QUANTUM, SpikePattern


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_pattern(rng, neuron_count=12, spike_interval=3.0, max_spikes=8,
                   allow_repeats=True) -> SpikePattern:
    """Random spike pattern on the encoding time grid; may be empty."""
    n = int(rng.integers(0, max_spikes + 1))
    if allow_repeats:
        ids = rng.integers(0, neuron_count, size=n)
    else:
        n = min(n, neuron_count)
        ids = rng.permutation(neuron_count)[:n]
    steps = int(round(spike_interval / TIME_QUANTUM))
    times = rng.integers(0, steps + 1, size=n) * TIME_QUANTUM
    return SpikePattern(neuron_count=neuron_count, neuron_ids=ids, times=times)


def random_neuron(rng, input_count=12, sigma=0.5, class_label=0,
                  max_terms=4, spike_interval=3.0) -> OutputNeuron:
    """Neuron with random Gaussian terms and a positive threshold."""
    neuron = OutputNeuron(class_label, input_count, sigma,
                          threshold=float(rng.uniform(0.2, 1.5)))
    steps = int(round(spike_interval / TIME_QUANTUM))
    ids, centers, amps = [], [], []
    for i in range(input_count):
        for _ in range(int(rng.integers(0, max_terms + 1))):
            ids.append(i)
            centers.append(int(rng.integers(0, steps + 1)) * TIME_QUANTUM)
            amps.append(float(rng.normal(0.0, 0.6)))
    if ids:
        neuron.add_terms(ids, centers, amps)
    return neuron


def blobs_dataset(rng, classes=3, per_class=30, features=4, spread=0.12):
    """Well-separated Gaussian blobs: easy, fast to learn, no downloads."""
    centers = rng.uniform(0.0, 1.0, size=(classes, features))
    rows, labels = [], []
    for c in range(classes):
        rows.append(centers[c] + rng.normal(0.0, spread, size=(per_class, features)))
        labels.append(np.full(per_class, c))
    x = np.vstack(rows)
    y = np.concatenate(labels).astype(np.int64)
    order = rng.permutation(len(y))
    return x[order], y[order]
