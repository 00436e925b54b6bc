"""Pipeline configuration: one flat record covering encoder, dynamics,
learning and scheduling knobs, with validation that names every bad field.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .dynamics import SimulationConfig
from .errors import ConfigError


@dataclass(frozen=True)
class NetworkConfig:
    """Everything needed to build and train a classifier, minus the data.

    Defaults are the benchmark settings; sigma and reference_rate are the
    two problem-dependent knobs and usually come from a per-dataset
    config or a grid search.
    """

    sigma: float = 1.0              # width of every weight Gaussian (ms)
    reference_rate: float = 0.05    # pulls the correct neuron's target earlier
    spike_interval: float = 3.0     # presynaptic window T (ms)
    t_max: float = 8.0              # end of postsynaptic interval (ms)
    tau: float = 3.0                # kernel time constant (ms)
    dt: float = 0.01                # threshold-search grid step (ms)
    desired_time: float = 2.0       # target first-spike time for a fresh class
    learning_rate: float = 0.1
    margin_rate: float = 0.3        # wrong-neuron margin, fraction of (spike_interval - desired)
    deadline_rate: float = 0.25     # on-time deadline, fraction of (spike_interval - desired)
    receptive_field_count: int = 6
    overlap: float = 0.7
    response_cutoff: float = 0.1
    max_epochs: int = 100

    def validate(self) -> None:
        """Raise ConfigError naming every field out of range."""
        bad = []
        for name in ("sigma", "spike_interval", "t_max", "tau", "dt", "learning_rate"):
            if getattr(self, name) <= 0:
                bad.append(f"{name} must be positive")
        for name in ("reference_rate", "margin_rate", "deadline_rate"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                bad.append(f"{name} must lie in (0, 1)")
        if not 0.0 < self.desired_time < self.spike_interval:
            bad.append("desired_time must lie in (0, spike_interval)")
        if self.t_max <= self.spike_interval:
            bad.append("t_max must exceed spike_interval")
        if self.receptive_field_count < 3:
            bad.append("receptive_field_count must be >= 3")
        if self.overlap <= 0:
            bad.append("overlap must be positive")
        if not 0.0 <= self.response_cutoff < 1.0:
            bad.append("response_cutoff must lie in [0, 1)")
        if self.max_epochs < 0:
            bad.append("max_epochs must be >= 0")
        if bad:
            raise ConfigError("; ".join(bad))

    def simulation(self) -> SimulationConfig:
        return SimulationConfig(tau=self.tau, t_max=self.t_max, dt=self.dt)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkConfig":
        """Build from a JSON-style dict; unknown keys are an error."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        ints = {"receptive_field_count", "max_epochs"}
        kwargs = {}
        for key, value in doc.items():
            kwargs[key] = int(value) if key in ints else float(value)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def with_overrides(self, **kwargs) -> "NetworkConfig":
        cfg = replace(self, **kwargs)
        cfg.validate()
        return cfg
