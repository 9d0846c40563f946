import numpy as np
import pytest

from ruleopt import Action
from ruleopt.synthetic import ALPHABETS, SyntheticConfig, _fit, generate


@pytest.fixture(scope="module")
def full():
    return generate(0)


def test_shape_and_fraud_rate(full):
    data, splits, specs = full
    assert (data.n, data.k) == (225_000, 98)
    assert int(data.triggers.labels.sum()) == 11_250
    assert splits == [(0, 75_000), (75_000, 150_000), (150_000, 225_000)]


def test_rule_counts_and_priorities(full):
    data, _, _ = full
    actions = [r.action for r in data.rules]
    assert (actions.count(Action.ACCEPT), actions.count(Action.ALERT),
            actions.count(Action.DECLINE)) == (8, 30, 60)
    for r in data.rules:
        assert r.original_priority in ALPHABETS[r.action]
        assert data.amap[r.original_priority] == r.action


def test_realized_support_and_ratio(full):
    data, _, specs = full
    fired, labels = data.triggers.fired, data.triggers.labels
    for j, (r, s) in enumerate(zip(data.rules, specs)):
        col = fired[:, j]
        assert int(col.sum()) == s.support
        good = 0 if r.action == Action.ACCEPT else 1
        correct = int((labels[col] == good).sum())
        assert correct == s.correct
        assert abs(correct / s.support - s.ratio) <= 1 / s.support + 1e-12


def test_accept_npv_example():
    # one accept rule with q = 0.75, s = 40000
    s, c, i = _fit(40_000, 0.75, 213_750, 11_250)
    assert (s, c, i) == (40_000, 30_000, 10_000)
    assert abs(c / s - 0.75) <= 0.01


def test_support_shrinks_when_a_label_runs_out():
    s, c, i = _fit(100_000, 0.5, 225_000, 11_250)
    assert i <= 11_250 and c <= 225_000
    assert abs(c / s - 0.5) <= 1 / s


def test_same_seed_same_bits():
    cfg = SyntheticConfig(n=3000, n_fraud=150)
    a, _, _ = generate(5, cfg)
    b, _, _ = generate(5, cfg)
    c, _, _ = generate(6, cfg)
    assert np.array_equal(a.triggers.fired, b.triggers.fired)
    assert a.rules == b.rules
    assert not np.array_equal(a.triggers.fired, c.triggers.fired)


def test_fraud_rate_exact_for_other_sizes():
    data, splits, _ = generate(1, SyntheticConfig(n=4000, n_fraud=200))
    assert data.triggers.labels.sum() == 200
    assert [b - a for a, b in splits] == [1333, 1334, 1333]
