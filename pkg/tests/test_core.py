import numpy as np
import pytest
from hypothesis import given, strategies as st

from builders import AMAP3, dataset
from ruleopt import INACTIVE, Action, ActionMap, Rule, TriggerMatrix, ValidationError, \
    check_priority_vector, mask, validate_ruleset


def test_mask_examples():
    assert mask([1, 0, 1], [3, 2, -1]).tolist() == [3, -1, -1]
    assert mask([0, 0, 0], [4, 1, 9]).tolist() == [-1, -1, -1]
    assert mask([1, 1], [-1, 7]).tolist() == [-1, 7]


def test_mask_length_mismatch():
    with pytest.raises(ValueError):
        mask([1, 0], [1, 2, 3])


@given(st.data())
def test_mask_idempotent_and_all_off(data):
    k = data.draw(st.integers(1, 12))
    fired = np.array(data.draw(st.lists(st.booleans(), min_size=k, max_size=k)))
    p = np.array(data.draw(st.lists(st.integers(-1, 10), min_size=k, max_size=k)))
    r1 = mask(fired, p)
    assert mask(r1 > INACTIVE, p).tolist() == r1.tolist()
    assert mask(fired, np.full(k, -1)).max() == -1


def test_actionmap_alphabets():
    amap = ActionMap({0: "accept", 5: "accept", 2: "alert", 3: "decline"})
    assert amap.alphabet("accept") == (0, 5)
    assert amap.alphabet(Action.DECLINE) == (3,)
    assert amap[2] is Action.ALERT
    assert 7 not in amap


def test_well_formed_bundle():
    data = dataset([("a", "decline", 3), ("b", "accept", 1)], [[1, 0], [0, 1], [0, 0]], [1, 0, 1])
    assert (data.n, data.k) == (3, 2)
    assert data.original_priorities().tolist() == [3, 1]


def _tm(fired, ts=None, labels=None):
    fired = np.asarray(fired, dtype=bool)
    n = fired.shape[0]
    return TriggerMatrix(fired, np.arange(n) if ts is None else np.asarray(ts),
                         np.zeros(n, np.int8) if labels is None else np.asarray(labels, np.int8))


def test_unmapped_priority():
    with pytest.raises(ValidationError) as exc:
        validate_ruleset([Rule("a", "accept", 5)], AMAP3, _tm([[1]]))
    assert any("unmapped priority" in v for v in exc.value.violations)


def test_unsorted_timestamps():
    with pytest.raises(ValidationError) as exc:
        validate_ruleset([Rule("a", "accept", 1)], AMAP3, _tm([[1], [0], [1]], ts=[3, 1, 2]))
    assert "unsorted timestamps" in exc.value.violations


def test_all_violations_reported_together():
    rules = [Rule("a", "accept", 2), Rule("b", "alert", 9), Rule("a", "alert", 2)]
    with pytest.raises(ValidationError) as exc:
        validate_ruleset(rules, AMAP3, _tm([[1, 0]], labels=[2]))
    text = " | ".join(exc.value.violations)
    for needle in ("duplicate rule id", "mismatch", "unmapped priority", "column-count",
                   "non-binary label"):
        assert needle in text


def test_unknown_blacklist_field():
    with pytest.raises(ValidationError, match="unknown field name"):
        validate_ruleset([Rule("u", "alert", 2, updates_fields={"email"})], AMAP3, _tm([[1]]))


def test_priority_vector_invariants():
    rules = [Rule("m", "accept", 1, mandatory=True), Rule("f", "decline", 3, frozen=True),
             Rule("x", "alert", 2)]
    check_priority_vector(np.array([1, 3, -1]), rules, AMAP3)
    with pytest.raises(ValidationError) as exc:
        check_priority_vector(np.array([-1, -1, 3]), rules, AMAP3)
    text = " | ".join(exc.value.violations)
    assert "mandatory-and-inactive" in text
    assert "frozen rule reprioritized" in text
    assert "action/priority mismatch" in text


def test_trigger_matrix_is_read_only():
    data = dataset([("a", "accept", 1)], [[1], [0]], [0, 1])
    with pytest.raises(ValueError):
        data.triggers.fired[0, 0] = False


def test_priority_map_roundtrip():
    data = dataset([("a", "accept", 1), ("b", "alert", 2)], [[1, 1]], [0])
    p = np.array([-1, 2])
    assert data.from_priority_map(data.to_priority_map(p)).tolist() == [-1, 2]
    assert data.from_priority_map({"b": 2}).tolist() == [-1, 2]
