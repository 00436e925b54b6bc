"""Scheduling, per-sample branching, epoch loop, convergence, inference."""

import math

import numpy as np
import pytest

from sefm.config import NetworkConfig
from sefm.dynamics import model_to_json_bytes, response_matrix
from sefm.encoding import SpikePattern, encode_dataset, fit_ranges
from sefm.errors import ConfigError, InputError
from sefm.training import (
    Outcome,
    build_network,
    epoch_order,
    evaluate,
    margin_window,
    on_time_deadline,
    predict,
    predict_one,
    process_sample,
    ref_time_correct,
    ref_time_wrong,
    train,
)

from conftest import blobs_dataset


CFG = NetworkConfig(sigma=0.5)


def pattern_of(ids, times, n=4):
    return SpikePattern(neuron_count=n, neuron_ids=ids, times=times)


def empty_pattern(n=4):
    return SpikePattern(neuron_count=n, neuron_ids=np.zeros(0, dtype=np.int64),
                        times=np.zeros(0))


def two_class_net(cfg=CFG):
    """Class 0 keyed to inputs {0,1}, class 1 to inputs {2,3}."""
    net = build_network(cfg, class_count=2, input_count=4)
    a = pattern_of([0, 1], [0.3, 0.6])
    b = pattern_of([2, 3], [0.3, 0.6])
    assert process_sample(net, a, 0, cfg).outcome is Outcome.INITIALIZED
    assert process_sample(net, b, 1, cfg).outcome is Outcome.INITIALIZED
    return net, a, b


# --- scheduling functions ---------------------------------------------------

def test_on_time_deadline_quarter_of_remaining_window():
    # 2.0 + 0.25 * (3.0 - 2.0)
    assert on_time_deadline(2.0, 0.25, 3.0) == pytest.approx(2.25)


def test_margin_window_fraction_of_remaining_window():
    assert margin_window(2.0, 0.3, 3.0) == pytest.approx(0.3)
    assert margin_window(1.0, 0.3, 3.0) == pytest.approx(0.6)


def test_ref_time_correct_steps_earlier():
    assert ref_time_correct(4.0, 0.05, 2.0) == pytest.approx(3.8)
    assert ref_time_correct(8.0, 0.05, 2.0) == pytest.approx(7.6)


def test_ref_time_correct_clamped_at_desired():
    assert ref_time_correct(2.05, 0.5, 2.0) == 2.0
    assert ref_time_correct(2.0, 0.05, 2.0) == 2.0


def test_ref_time_wrong_margin_past_anchor():
    assert ref_time_wrong(2.0, 0.3, 8.0) == pytest.approx(2.3)
    assert ref_time_wrong(2.375, 0.3, 8.0) == pytest.approx(2.675)


def test_ref_time_wrong_capped_at_t_max():
    assert ref_time_wrong(7.9, 0.3, 8.0) == 8.0


# --- per-sample branches ------------------------------------------------------

def test_label_out_of_range_rejected():
    net, a, _ = two_class_net()
    with pytest.raises(InputError):
        process_sample(net, a, 2, CFG)
    with pytest.raises(InputError):
        process_sample(net, a, -1, CFG)


def test_empty_pattern_is_no_spikes_and_no_mutation():
    net, _, _ = two_class_net()
    before = model_to_json_bytes(net)
    res = process_sample(net, empty_pattern(), 0, CFG)
    assert res.outcome is Outcome.NO_SPIKES
    assert res.updated_classes == ()
    assert res.predicted is None
    assert model_to_json_bytes(net) == before


def test_initialization_fires_at_desired_time():
    net, a, _ = two_class_net()
    activity = net.evaluate_pattern(a)
    assert activity.fire_times[0] == pytest.approx(CFG.desired_time, abs=CFG.dt + 1e-9)


def test_initialization_with_no_eligible_spike_waits():
    cfg = CFG
    net = build_network(cfg, class_count=1, input_count=2)
    late_only = pattern_of([0], [2.5], n=2)
    res = process_sample(net, late_only, 0, cfg)
    assert res.outcome is Outcome.SKIPPED
    assert res.ineligible_classes == (0,)
    assert net.neurons[0] is None  # still waiting for a usable first pattern
    ok = process_sample(net, pattern_of([0], [0.5], n=2), 0, cfg)
    assert ok.outcome is Outcome.INITIALIZED
    assert net.neurons[0] is not None


def test_punctual_sample_with_safe_rivals_is_skipped():
    net, a, _ = two_class_net()
    before = model_to_json_bytes(net)
    res = process_sample(net, a, 0, CFG)
    # neuron 0 fires near 2.0 <= 2.25 deadline; neuron 1 has no weight on
    # inputs {0,1}, stays silent (counts as t_max = 8), margin is huge
    assert res.outcome is Outcome.SKIPPED
    assert res.predicted == 0
    assert res.updated_classes == ()
    assert model_to_json_bytes(net) == before


def test_on_time_branch_pushes_crowding_rival_only():
    net, a, _ = two_class_net()
    # give the rival strong weight on class 0's inputs so it fires early
    net.neurons[1].add_terms([0, 1], [0.3, 0.6], [2.0, 2.0])
    correct_terms = [eff.terms() for eff in net.neurons[0].efficacies]
    correct_threshold = net.neurons[0].threshold
    rival_terms = [eff.terms() for eff in net.neurons[1].efficacies]
    res = process_sample(net, a, 0, CFG)
    assert res.outcome is Outcome.ON_TIME
    assert res.updated_classes == (1,)
    # rival got pushed back, labeled class untouched
    assert [eff.terms() for eff in net.neurons[1].efficacies] != rival_terms
    assert [eff.terms() for eff in net.neurons[0].efficacies] == correct_terms
    assert net.neurons[0].threshold == correct_threshold


def test_late_branch_corrects_labeled_class():
    net, a, _ = two_class_net()
    # make class 0's neuron unreachable on pattern a -> silent -> late
    net.neurons[0].set_threshold(50.0)
    res = process_sample(net, a, 0, CFG)
    assert res.outcome is Outcome.LATE
    assert 0 in res.updated_classes
    # rival silent at t_max=8 vs anchor 7.6: gap 0.4 >= margin 0.3, untouched
    assert res.updated_classes == (0,)


def test_late_branch_also_pushes_crowding_rival():
    net, a, _ = two_class_net()
    net.neurons[0].set_threshold(50.0)          # silent -> actual 8.0, anchor 7.6
    net.neurons[1].add_terms([0, 1], [0.3, 0.6], [0.9, 0.9])
    t1 = net.evaluate_pattern(a).fire_times[1]
    assert not math.isnan(t1) and t1 - 7.6 < 0.3
    res = process_sample(net, a, 0, CFG)
    assert res.outcome is Outcome.LATE
    assert res.updated_classes == (0, 1)


def test_exactly_one_outcome_and_untouched_model_when_no_updates(rng):
    cfg = CFG
    net, a, b = two_class_net(cfg)
    for _ in range(200):
        n_spk = int(rng.integers(0, 5))
        ids = rng.integers(0, 4, size=n_spk)
        times = rng.integers(0, 3001, size=n_spk) * 0.001
        pattern = pattern_of(ids, times)
        label = int(rng.integers(0, 2))
        before = model_to_json_bytes(net)
        res = process_sample(net, pattern, label, cfg)
        assert isinstance(res.outcome, Outcome)
        if res.outcome in (Outcome.NO_SPIKES, Outcome.SKIPPED) or not res.updated_classes:
            assert model_to_json_bytes(net) == before
        else:
            assert model_to_json_bytes(net) != before


# --- epoch loop ----------------------------------------------------------------

def encoded_blobs(rng, classes=3, per_class=20):
    x, y = blobs_dataset(rng, classes=classes, per_class=per_class)
    enc = fit_ranges(x)
    return encode_dataset(x, enc), y


def test_train_validations(rng):
    patterns, labels = encoded_blobs(rng)
    with pytest.raises(InputError):
        train([], np.array([]), CFG, class_count=3)
    with pytest.raises(InputError):
        train(patterns, labels[:-1], CFG, class_count=3)
    with pytest.raises(ConfigError):
        train(patterns, labels, CFG, class_count=4)  # class 3 absent


def test_train_zero_epochs_touches_nothing(rng):
    patterns, labels = encoded_blobs(rng)
    result = train(patterns, labels, CFG.with_overrides(max_epochs=0), 3, seed=1)
    assert result.epochs_run == 0
    assert not result.converged
    assert all(n is None for n in result.network.neurons)


def test_train_converges_on_separable_blobs(rng):
    patterns, labels = encoded_blobs(rng)
    cfg = CFG.with_overrides(max_epochs=50)
    result = train(patterns, labels, cfg, 3, seed=3)
    assert result.converged
    assert result.epochs_run <= 50
    last = result.epoch_stats[-1]
    assert last.neuron_updates == 0
    acc, confusion = evaluate(result.network, patterns, labels)
    assert acc >= 0.95
    assert confusion.sum() == len(labels)
    assert np.array_equal(confusion.sum(axis=1), np.bincount(labels, minlength=3))


def test_epoch_stat_counters_partition_samples(rng):
    patterns, labels = encoded_blobs(rng)
    result = train(patterns, labels, CFG.with_overrides(max_epochs=5), 3, seed=9)
    for st in result.epoch_stats:
        branches = st.initialized + st.on_time + st.late + st.skipped + st.no_spikes
        assert branches == len(patterns)
        assert st.evaluated == branches - st.initialized - st.no_spikes
        assert 0.0 <= st.train_accuracy <= 1.0
        d = st.to_dict()
        assert d["epoch"] == st.epoch and d["train_accuracy"] == st.train_accuracy


def test_train_is_deterministic_per_seed(rng):
    patterns, labels = encoded_blobs(rng)
    cfg = CFG.with_overrides(max_epochs=8)
    b1 = model_to_json_bytes(train(patterns, labels, cfg, 3, seed=5).network)
    b2 = model_to_json_bytes(train(patterns, labels, cfg, 3, seed=5).network)
    b3 = model_to_json_bytes(train(patterns, labels, cfg, 3, seed=6).network)
    assert b1 == b2
    assert b1 != b3


def test_train_matches_uncached_manual_loop(rng):
    patterns, labels = encoded_blobs(rng, classes=2, per_class=12)
    cfg = CFG.with_overrides(max_epochs=4)
    fast = train(patterns, labels, cfg, 2, seed=11)

    slow = build_network(cfg, 2, patterns[0].neuron_count)
    for epoch in range(cfg.max_epochs):
        changed = 0
        for s in epoch_order(11, epoch, len(patterns)):
            res = process_sample(slow, patterns[s], int(labels[s]), cfg)
            changed += len(res.updated_classes)
        if changed == 0:
            break
    assert model_to_json_bytes(fast.network) == model_to_json_bytes(slow)


def test_epoch_order_is_pure_seeded_permutation():
    a = epoch_order(7, 0, 30)
    assert sorted(a) == list(range(30))
    assert a == epoch_order(7, 0, 30)
    assert a != epoch_order(7, 1, 30)
    assert a != epoch_order(8, 0, 30)


# --- inference -------------------------------------------------------------------

def test_predict_earliest_firing_class_wins():
    net, a, b = two_class_net()
    assert predict_one(net, a) == 0
    assert predict_one(net, b) == 1
    out = predict(net, [a, b, a])
    assert list(out) == [0, 1, 0]


def test_predict_tie_breaks_to_lowest_class():
    cfg = CFG
    net = build_network(cfg, class_count=2, input_count=4)
    a = pattern_of([0, 1], [0.3, 0.6])
    process_sample(net, a, 0, cfg)
    process_sample(net, a, 1, cfg)  # identical initialization for class 1
    assert predict_one(net, a) == 0


def test_predict_silent_fallback_uses_peak():
    net, a, _ = two_class_net()
    net.neurons[0].set_threshold(99.0)
    net.neurons[1].set_threshold(99.0)
    # class 0 still has all the weight for inputs {0,1}
    assert predict_one(net, a) == 0


def test_predict_empty_pattern_defaults_to_first_class():
    net, _, _ = two_class_net()
    assert predict_one(net, empty_pattern()) == 0
