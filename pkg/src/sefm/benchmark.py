"""Benchmark orchestration: repeated random splits, sweeps, grid search.

Each run draws its own stratified split and its own presentation
shuffles from seeds derived off one root seed, so a whole benchmark is
reproducible from (config, seed) alone.  Sweeps reuse the same run seeds
across parameter values, which pairs the comparisons sample-for-sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import training
from .config import NetworkConfig
from .data import TabularDataset, confusion_matrix, impute_median, stratified_split
from .dynamics import Network
from .encoding import EncoderConfig, encode_dataset, fit_ranges
from .errors import DataError
from .rng import derive_seed

REPORT_FORMAT = "sefm-report/1"


def summarize(values) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    arr = np.asarray(values, dtype=np.float64)
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), sd


def format_mean_sd(mean: float, sd: float, decimals: int = 1) -> str:
    return f"{mean:.{decimals}f}({sd:.{decimals}f})"


@dataclass
class RunResult:
    run: int
    seed: int
    train_accuracy: float
    test_accuracy: float
    epochs_run: int
    converged: bool
    confusion: np.ndarray
    train_size: int
    test_size: int
    epoch_stats: list[dict]

    def to_dict(self) -> dict:
        return {
            "run": self.run,
            "seed": self.seed,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "epochs_run": self.epochs_run,
            "converged": self.converged,
            "confusion": self.confusion.tolist(),
            "train_size": self.train_size,
            "test_size": self.test_size,
            "epochs": self.epoch_stats,
        }


@dataclass
class SplitOutcome:
    result: RunResult
    network: Network
    encoder: EncoderConfig
    wall_seconds: float


def run_split(dataset: TabularDataset, train_idx: np.ndarray, test_idx: np.ndarray,
              cfg: NetworkConfig, seed: int, run: int = 0) -> SplitOutcome:
    """Impute, fit the encoder, encode, train and score one split.

    Everything derived from the data (medians, feature ranges) comes
    from the training side only.
    """
    train_x, test_x, _ = impute_median(dataset.features[train_idx],
                                       dataset.features[test_idx])
    train_y = dataset.labels[train_idx]
    test_y = dataset.labels[test_idx]
    encoder = fit_ranges(train_x,
                         receptive_field_count=cfg.receptive_field_count,
                         overlap=cfg.overlap,
                         spike_interval=cfg.spike_interval,
                         response_cutoff=cfg.response_cutoff)
    train_patts = encode_dataset(train_x, encoder)
    test_patts = encode_dataset(test_x, encoder)
    fit = training.train(train_patts, train_y, cfg, dataset.class_count, seed=seed)
    train_acc = training.accuracy_score(training.predict(fit.network, train_patts), train_y)
    test_pred = training.predict(fit.network, test_patts)
    test_acc = training.accuracy_score(test_pred, test_y)
    result = RunResult(run=run, seed=seed,
                       train_accuracy=train_acc, test_accuracy=test_acc,
                       epochs_run=fit.epochs_run, converged=fit.converged,
                       confusion=confusion_matrix(test_y, test_pred, dataset.class_count),
                       train_size=len(train_idx), test_size=len(test_idx),
                       epoch_stats=[s.to_dict() for s in fit.epoch_stats])
    return SplitOutcome(result=result, network=fit.network, encoder=encoder,
                        wall_seconds=fit.wall_seconds)


@dataclass
class BenchmarkResult:
    dataset: str
    architecture: str
    config: NetworkConfig
    seed: int
    runs: list[RunResult]
    wall_seconds: float = 0.0
    last_outcome: SplitOutcome | None = None

    @property
    def train_stats(self) -> tuple[float, float]:
        return summarize([100.0 * r.train_accuracy for r in self.runs])

    @property
    def test_stats(self) -> tuple[float, float]:
        return summarize([100.0 * r.test_accuracy for r in self.runs])

    def to_dict(self) -> dict:
        train_mean, train_sd = self.train_stats
        test_mean, test_sd = self.test_stats
        return {
            "format": REPORT_FORMAT,
            "kind": "benchmark",
            "dataset": self.dataset,
            "architecture": self.architecture,
            "seed": self.seed,
            "run_count": len(self.runs),
            "config": self.config.to_dict(),
            "train_accuracy_percent": {"mean": train_mean, "sd": train_sd,
                                       "display": format_mean_sd(train_mean, train_sd)},
            "test_accuracy_percent": {"mean": test_mean, "sd": test_sd,
                                      "display": format_mean_sd(test_mean, test_sd)},
            "runs": [r.to_dict() for r in self.runs],
        }


def _split_for_run(dataset: TabularDataset, train_size: int, run_seed: int):
    return stratified_split(dataset.labels, train_size, derive_seed(run_seed, 0))


def _benchmark_unit(args) -> SplitOutcome:
    dataset, cfg, train_size, seed, run = args
    run_seed = derive_seed(seed, run)
    train_idx, test_idx = _split_for_run(dataset, train_size, run_seed)
    return run_split(dataset, train_idx, test_idx, cfg,
                     seed=derive_seed(run_seed, 1), run=run)


def benchmark(dataset: TabularDataset, cfg: NetworkConfig, *, train_size: int,
              run_count: int = 10, seed: int = 0, jobs: int = 1,
              keep_last: bool = False) -> BenchmarkResult:
    """run_count independent stratified splits trained and scored.

    Runs share nothing, so jobs > 1 fans them out over processes; the
    results (and their order) are the same either way.
    """
    if not 0 < train_size < dataset.sample_count:
        raise DataError(f"train_size {train_size} invalid for {dataset.sample_count} samples")
    cfg.validate()
    units = [(dataset, cfg, train_size, seed, run) for run in range(run_count)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_benchmark_unit, units))
    else:
        outcomes = [_benchmark_unit(u) for u in units]
    runs = [o.result for o in outcomes]
    wall = sum(o.wall_seconds for o in outcomes)
    arch = f"{outcomes[-1].encoder.neuron_count}-{dataset.class_count}" if outcomes else ""
    return BenchmarkResult(dataset=dataset.name, architecture=arch,
                           config=cfg, seed=seed, runs=runs, wall_seconds=wall,
                           last_outcome=outcomes[-1] if keep_last and outcomes else None)


# -- sigma sweep ---------------------------------------------------------------

@dataclass
class SweepRow:
    sigma: float
    test_mean: float
    test_sd: float
    train_mean: float
    train_sd: float
    epochs_mean: float

    def to_dict(self) -> dict:
        return {"sigma": self.sigma,
                "test_mean": self.test_mean, "test_sd": self.test_sd,
                "train_mean": self.train_mean, "train_sd": self.train_sd,
                "epochs_mean": self.epochs_mean}


def sigma_sweep(dataset: TabularDataset, cfg: NetworkConfig, sigmas, *,
                train_size: int, run_count: int = 5, seed: int = 0,
                jobs: int = 1) -> list[SweepRow]:
    """Benchmark the same splits under each Gaussian width in turn."""
    rows = []
    for sigma in sigmas:
        res = benchmark(dataset, cfg.with_overrides(sigma=float(sigma)),
                        train_size=train_size, run_count=run_count, seed=seed,
                        jobs=jobs)
        test_mean, test_sd = res.test_stats
        train_mean, train_sd = res.train_stats
        rows.append(SweepRow(sigma=float(sigma), test_mean=test_mean, test_sd=test_sd,
                             train_mean=train_mean, train_sd=train_sd,
                             epochs_mean=float(np.mean([r.epochs_run for r in res.runs]))))
    return rows


# -- grid search -----------------------------------------------------------------

@dataclass
class GridCell:
    sigma: float
    reference_rate: float
    val_mean: float
    val_sd: float

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "reference_rate": self.reference_rate,
                "val_mean": self.val_mean, "val_sd": self.val_sd}


@dataclass
class GridSearchResult:
    cells: list[GridCell]
    best: GridCell

    def to_dict(self) -> dict:
        return {"best": self.best.to_dict(),
                "cells": [c.to_dict() for c in self.cells]}


def _grid_unit(args) -> float:
    dataset, cfg, fit_idx, val_idx, train_seed = args
    outcome = run_split(dataset, fit_idx, val_idx, cfg, seed=train_seed)
    return 100.0 * outcome.result.test_accuracy


def grid_search(dataset: TabularDataset, cfg: NetworkConfig, sigmas, reference_rates,
                *, train_size: int, run_count: int = 3, seed: int = 0,
                val_fraction: float = 0.25, jobs: int = 1) -> GridSearchResult:
    """Pick (sigma, reference_rate) by validation accuracy.

    Validation sets are carved out of each run's training side; the test
    side of every split stays untouched.  Ties prefer the smaller sigma,
    then the smaller reference_rate.
    """
    if not 0.0 < val_fraction < 1.0:
        raise DataError("val_fraction must lie in (0, 1)")
    if not sigmas or not reference_rates:
        raise DataError("grid axes must be non-empty")
    plans = []
    for run in range(run_count):
        run_seed = derive_seed(seed, run)
        train_idx, _ = _split_for_run(dataset, train_size, run_seed)
        val_size = max(1, int(round(val_fraction * len(train_idx))))
        fit_rel, val_rel = stratified_split(dataset.labels[train_idx],
                                            len(train_idx) - val_size,
                                            derive_seed(run_seed, 2))
        plans.append((train_idx[fit_rel], train_idx[val_rel],
                      derive_seed(run_seed, 1)))
    grid = [(float(s), float(r)) for s in sigmas for r in reference_rates]
    units = []
    for sigma, rate in grid:
        cell_cfg = cfg.with_overrides(sigma=sigma, reference_rate=rate)
        units.extend((dataset, cell_cfg, fit, val, ts) for fit, val, ts in plans)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(_grid_unit, units))
    else:
        scores = [_grid_unit(u) for u in units]
    cells = []
    for c, (sigma, rate) in enumerate(grid):
        mean, sd = summarize(scores[c * run_count:(c + 1) * run_count])
        cells.append(GridCell(sigma=sigma, reference_rate=rate,
                              val_mean=mean, val_sd=sd))
    best = max(cells, key=lambda c: (c.val_mean, -c.sigma, -c.reference_rate))
    return GridSearchResult(cells=cells, best=best)
