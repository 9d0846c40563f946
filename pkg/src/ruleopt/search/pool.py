"""Priority shuffling and rules-pool augmentation."""
from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from ..core import INACTIVE, Action, ActionMap, Dataset, Rule, TriggerMatrix


def random_priority_shuffle(
    p_i: int, action: Action, amap: ActionMap, rng: np.random.Generator
) -> int:
    """Uniform draw from the other priority levels carrying ``action``.

    A singleton alphabet leaves ``p_i`` unchanged.
    """
    choices = [q for q in amap.alphabet(action) if q != p_i]
    if not choices:
        return int(p_i)
    return int(choices[rng.integers(len(choices))])


def clone_id(parent: str, priority: int) -> str:
    return f"{parent}@{priority}"


def augment_rules_pool(
    triggers: TriggerMatrix, rules: Sequence[Rule], amap: ActionMap
) -> tuple[TriggerMatrix, tuple[Rule, ...]]:
    """Append one clone column per alternative same-action priority of each rule.

    Clones share the parent's firing column and blacklist roles, carry the
    alternative level as their own priority and are never mandatory. Frozen
    rules are not cloned since they are outside the optimization.
    """
    columns = list(range(len(rules)))
    pool = list(rules)
    for i, r in enumerate(rules):
        if r.frozen or r.parent is not None:
            continue
        for q in amap.alphabet(r.action):
            if q == r.original_priority:
                continue
            pool.append(
                dataclasses.replace(
                    r, id=clone_id(r.id, q), original_priority=q, mandatory=False, parent=r.id
                )
            )
            columns.append(i)
    if len(pool) == len(rules):
        return triggers, tuple(rules)
    return triggers.take_columns(columns), tuple(pool)


def augment_dataset(data: Dataset) -> Dataset:
    triggers, rules = augment_rules_pool(data.triggers, data.rules, data.amap)
    return Dataset(rules, data.amap, triggers)


def embed(p: np.ndarray, pool_size: int) -> np.ndarray:
    """Extend a vector over the original columns with every clone switched off."""
    p = np.asarray(p, dtype=np.int64)
    return np.concatenate([p, np.full(pool_size - len(p), INACTIVE, dtype=np.int64)])
