"""Small dataset constructors shared by the test modules."""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from naive import Case
from ruleopt import Action, ActionMap, Dataset, Rule, TriggerMatrix, validate_ruleset

AMAP3 = ActionMap({1: "accept", 2: "alert", 3: "decline"})


def dataset(
    rules: Sequence[tuple],
    fired: Sequence[Sequence[int]],
    labels: Sequence[int],
    amap: ActionMap = AMAP3,
    times: Sequence[int] | None = None,
    fields: Mapping[str, Sequence[str | None]] | None = None,
) -> Dataset:
    """``rules`` entries are ``(id, action, priority)`` or ``Rule`` objects."""
    built = [r if isinstance(r, Rule) else Rule(*r) for r in rules]
    fired = np.asarray(fired, dtype=bool).reshape(len(labels), len(built))
    n = len(labels)
    ts = np.arange(n, dtype=np.int64) if times is None else np.asarray(times, dtype=np.int64)
    fv = {f: np.array(list(v), dtype=object) for f, v in (fields or {}).items()}
    return validate_ruleset(built, amap, TriggerMatrix(fired, ts, np.asarray(labels, np.int8), fv))


def from_case(case: Case) -> Dataset:
    rules = [
        Rule(f"r{i}", Action.parse(case.actions[i]),
             case.priorities[i] if case.priorities[i] > -1
             else min(q for q, a in case.amap.items() if a == case.actions[i]),
             updates_fields=frozenset(case.updates[i]), checks_fields=frozenset(case.checks[i]))
        for i in range(case.k)
    ]
    return dataset(rules, case.fired, case.labels, ActionMap(case.amap), case.times, case.values)


def deployed(case: Case) -> np.ndarray:
    return np.asarray(case.priorities, dtype=np.int64)
