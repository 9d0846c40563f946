import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import dataset
from ruleopt import Action, ActionMap, EvaluationReport, Evaluator, LossSpec, decide, evaluate, \
    get_truth_value
from ruleopt.evaluation import Outcome, evaluate_rowwise
from ruleopt.losses import MissingBaselineError


def test_decide_examples():
    amap = ActionMap({5: "alert", 3: "decline", 8: "decline"})
    assert decide([-1, 5, 3], amap) is Action.ALERT
    assert decide([-1, -1, -1], amap) is Action.ACCEPT
    assert decide([8], amap) is Action.DECLINE


def test_truth_values():
    assert get_truth_value(Action.ACCEPT, 0) is Outcome.TN
    assert get_truth_value(Action.ACCEPT, 1) is Outcome.FN
    assert get_truth_value(Action.ALERT, 0) is Outcome.FP
    assert get_truth_value(Action.DECLINE, 1) is Outcome.TP


@pytest.fixture
def three():
    return dataset([("R1", "decline", 3), ("R2", "accept", 1)], [[1, 1], [0, 1], [0, 0]], [1, 0, 1])


def test_three_transaction_trace(three):
    rep = evaluate(three, three.original_priorities())
    assert Evaluator(three).decisions(three.original_priorities()).tolist() == [2, 0, 0]
    assert np.array_equal(evaluate_rowwise(three, three.original_priorities()), rep.counts)
    assert (rep.tp, rep.tn, rep.fn, rep.fp) == (1, 1, 1, 0)
    assert rep.recall == 0.5 and rep.fpr == 0.0


def test_switching_off_r1(three):
    rep = evaluate(three, np.array([-1, 1]))
    assert rep.fn == 2 and rep.recall == 0.0
    assert rep.rules_active == 1 and rep.rules_active_fraction == 0.5


def test_all_off_all_legit_degenerate():
    data = dataset([("a", "decline", 3)], [[1], [1]], [0, 0])
    rep = evaluate(data, np.array([-1]))
    assert rep.counts[0, 0] == 2 and rep.fpr == 0.0 and rep.recall == 0.0
    assert "recall" in rep.undefined


def test_constrained_loss_needs_baseline(three):
    with pytest.raises(MissingBaselineError):
        evaluate(three, three.original_priorities(), loss=LossSpec.from_config("d1"))


def test_report_dict_roundtrip(three):
    rep = evaluate(three, three.original_priorities(), loss=LossSpec.from_config("synthetic"))
    assert EvaluationReport.from_dict(rep.to_dict()).same_as(rep)


def _random_data(rng, n, k):
    actions = rng.choice(["accept", "alert", "decline"], size=k)
    prio = {"accept": 1, "alert": 2, "decline": 3}
    rules = [(f"r{i}", a, prio[a]) for i, a in enumerate(actions)]
    fired = rng.random((n, k)) < 0.3
    labels = (rng.random(n) < 0.2).astype(int)
    return dataset(rules, fired, labels)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 60), st.integers(1, 8))
def test_fast_counts_match_rowwise(seed, n, k):
    rng = np.random.default_rng(seed)
    data = _random_data(rng, n, k)
    p = np.where(rng.random(k) < 0.3, -1, data.original_priorities())
    ev = Evaluator(data)
    dec = ev.decisions(p)
    expected = np.zeros((3, 2), int)
    np.add.at(expected, (dec, data.triggers.labels), 1)
    assert np.array_equal(ev.counts(p), expected)
    assert ev.counts(p).sum() == n


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_column_permutation_leaves_report_unchanged(seed):
    rng = np.random.default_rng(seed)
    data = _random_data(rng, 50, 6)
    p = np.where(rng.random(6) < 0.3, -1, data.original_priorities())
    perm = rng.permutation(6)
    shuffled = dataset([data.rules[i] for i in perm], data.triggers.fired[:, perm],
                       data.triggers.labels)
    assert evaluate(data, p).same_as(evaluate(shuffled, p[perm]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_silent_rule_only_moves_rules_fraction(seed):
    rng = np.random.default_rng(seed)
    data = _random_data(rng, 40, 5)
    fired = data.triggers.fired.copy()
    fired[:, 0] = False
    data = dataset(data.rules, fired, data.triggers.labels)
    p = data.original_priorities()
    q = p.copy()
    q[0] = -1
    a, b = evaluate(data, p), evaluate(data, q)
    assert np.array_equal(a.counts, b.counts)
    assert a.rules_active == b.rules_active + 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_removing_a_non_maximal_trigger_keeps_decision(seed):
    rng = np.random.default_rng(seed)
    data = _random_data(rng, 30, 5)
    p = data.original_priorities()
    ev = Evaluator(data)
    before = ev.decisions(p)
    fired = data.triggers.fired
    for x in range(data.n):
        r = np.where(fired[x], p, -1)
        for j in np.flatnonzero(fired[x]):
            if r[j] < r.max() or (r == r[j]).sum() > 1:
                f2 = fired.copy()
                f2[x, j] = False
                d2 = dataset(data.rules, f2, data.triggers.labels)
                assert Evaluator(d2).decisions(p)[x] == before[x]
                break


def test_metrics_identities():
    counts = np.array([[5, 1], [2, 3], [4, 6]])
    rep = EvaluationReport.from_counts(counts, 3, 4)
    assert rep.tp == 9 and rep.fp == 6 and rep.tn == 5 and rep.fn == 1
    assert rep.alert_rate == 5 / 21
    assert rep.fpr == 6 / 11 and rep.recall == 9 / 10
    assert rep.rules_active_fraction == 0.75
