"""Per-spike weight update rule for the output neurons.

Every update targets one neuron at one reference time t_hat.  The gap
between threshold and potential at t_hat is distributed over the
presynaptic spikes that precede t_hat, favoring spikes whose kernel
response exceeds their current momentary weight.  Applying an update
adds, per spike, one Gaussian term centered at that spike's time; the
potential at t_hat moves exactly onto the threshold.

Initialization works on the first pattern a neuron sees: the momentary
weights are set to the normalized kernel responses at the desired firing
time and the threshold is set to the potential this produces, so the
neuron starts out firing precisely on schedule for that pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import OutputNeuron, SimulationConfig, epsilon
from .encoding import SpikePattern
from .errors import SefmError

# The update shifts weight toward spikes whose normalized response
# exceeds the current momentary weight; spikes at or below it get a
# floor contribution of this value (and end up with zero excess).
EXCESS_FLOOR = 0.0


class NoEligibleSpikes(SefmError):
    """No presynaptic spike lies strictly before the reference time."""


def delta_v(threshold: float, v: float) -> float:
    """Potential gap the update must close at the reference time."""
    return threshold - v


def normalized_psp(times: np.ndarray, t_hat: float, tau: float) -> np.ndarray:
    """Kernel responses at t_hat over eligible spikes, normalized to sum 1.

    Spikes at or after t_hat contribute zero (they cannot influence the
    potential at t_hat).  Raises NoEligibleSpikes when nothing remains.
    """
    eps = epsilon(t_hat - np.asarray(times, dtype=np.float64), tau)
    total = eps.sum()
    if total <= 0.0:
        raise NoEligibleSpikes(f"no spike precedes reference time {t_hat}")
    return eps / total


def excess(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Positive part of (normalized response - momentary weight), per spike."""
    return np.where(u > w, u - w, EXCESS_FLOOR)


def modulation_factors(z: np.ndarray, eps_vals: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Response-weighted share of the update each spike receives; sums to 1.

    When every excess is zero (all momentary weights already at or above
    their normalized responses) the shares fall back to u itself.
    """
    weighted = z * eps_vals
    total = weighted.sum()
    if total <= 0.0:
        return u.copy()
    return weighted / total


def momentary_deltas(m: np.ndarray, dv: float, eps_vals: np.ndarray) -> np.ndarray:
    """Per-spike momentary weight change; zero wherever the share is zero.

    Dividing each share by its kernel response makes the induced
    potential change at the reference time come out to exactly dv:
    sum(delta * eps) = dv * sum(m) = dv.
    """
    out = np.zeros_like(m)
    mask = m != 0.0
    out[mask] = m[mask] * dv / eps_vals[mask]
    return out


@dataclass
class UpdateStep:
    """One computed (not yet applied) update for a single neuron."""

    neuron_ids: np.ndarray
    times: np.ndarray
    eps_vals: np.ndarray
    normalized: np.ndarray
    momentary_weights: np.ndarray
    shares: np.ndarray
    deltas: np.ndarray
    dv: float
    used_fallback: bool

    def induced_change(self) -> float:
        """Potential change at the reference time this step will cause."""
        return float(self.deltas @ self.eps_vals)


def compute_update(neuron: OutputNeuron, pattern: SpikePattern, t_hat: float,
                   sim: SimulationConfig,
                   weights: np.ndarray | None = None) -> UpdateStep:
    """Work out the per-spike deltas that move v(t_hat) onto the threshold.

    ``weights`` may pass in cached momentary weights (as returned by
    neuron.sample_weights for this pattern); otherwise they are sampled
    here.
    """
    times = pattern.times
    u = normalized_psp(times, t_hat, sim.tau)
    eps_vals = epsilon(t_hat - times, sim.tau)
    if weights is None:
        weights = neuron.sample_weights(pattern.neuron_ids, times)
    v = float(weights @ eps_vals)
    dv = delta_v(neuron.threshold, v)
    z = excess(u, weights)
    used_fallback = float((z * eps_vals).sum()) <= 0.0
    m = modulation_factors(z, eps_vals, u)
    deltas = momentary_deltas(m, dv, eps_vals)
    return UpdateStep(neuron_ids=pattern.neuron_ids, times=times,
                      eps_vals=eps_vals, normalized=u,
                      momentary_weights=np.asarray(weights, dtype=np.float64),
                      shares=m, deltas=deltas, dv=dv,
                      used_fallback=used_fallback)


def apply_update(neuron: OutputNeuron, step: UpdateStep, learning_rate: float) -> int:
    """Add the scaled Gaussian terms to the neuron; returns terms added.

    Zero deltas are skipped outright: they would add terms that change
    nothing while bloating the model.  A step whose deltas are all zero
    leaves the neuron untouched (version included).
    """
    scaled = learning_rate * step.deltas
    keep = scaled != 0.0
    if not keep.any():
        return 0
    neuron.add_terms(step.neuron_ids[keep], step.times[keep], scaled[keep])
    return int(keep.sum())


def initialize(neuron: OutputNeuron, pattern: SpikePattern, t_hat: float,
               sim: SimulationConfig) -> None:
    """First-pattern setup: weights from normalized responses, threshold to match.

    The full normalized response (not scaled by the learning rate) lands
    on each spike; the threshold becomes the resulting potential at
    t_hat, so this pattern fires exactly at t_hat.
    """
    u = normalized_psp(pattern.times, t_hat, sim.tau)
    eps_vals = epsilon(t_hat - pattern.times, sim.tau)
    keep = u != 0.0
    neuron.add_terms(pattern.neuron_ids[keep], pattern.times[keep], u[keep])
    neuron.set_threshold(float(u @ eps_vals))
