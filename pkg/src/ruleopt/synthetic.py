"""Synthetic benchmark: labels plus accept/alert/decline rules simulated from them.

Each rule gets a support (number of firings) and a target NPV (accept) or
precision (alert/decline). Its firings are ``round(q * s)`` rows with the
label the rule is right about and ``s - round(q * s)`` rows with the other
label, drawn without replacement. When one label cannot supply enough rows
the support is reduced to the largest value that keeps the target ratio.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Action, ActionMap, Dataset, Rule, TriggerMatrix, validate_ruleset

ALPHABETS = {
    Action.ACCEPT: (0, 1, 5, 6, 10),
    Action.ALERT: (2, 4, 7, 9),
    Action.DECLINE: (3, 8),
}


@dataclass(frozen=True)
class SyntheticConfig:
    n: int = 225_000
    n_fraud: int = 11_250
    n_accept: int = 8
    n_alert: int = 30
    n_decline: int = 60
    accept_support: tuple[float, float] = (45_000.0, 22_500.0)
    flag_support: tuple[float, float] = (22.5, 225.0)
    accept_npv: tuple[float, float] = (0.75, 0.20)
    flag_precision: tuple[float, float] = (0.17, 0.05)
    ratio_bounds: tuple[float, float] = (0.01, 0.99)
    n_splits: int = 3


@dataclass(frozen=True)
class RuleSpec:
    """Targets drawn for one rule, before and after clamping."""

    support: int
    ratio: float
    correct: int
    incorrect: int


def _fit(s: int, q: float, n_good: int, n_bad: int) -> tuple[int, int, int]:
    correct = int(round(q * s))
    incorrect = s - correct
    if correct <= n_good and incorrect <= n_bad:
        return s, correct, incorrect
    s_max = int(min(n_good / q if q > 0 else np.inf, n_bad / (1 - q) if q < 1 else np.inf))
    while s_max > 1:
        correct = int(round(q * s_max))
        if correct <= n_good and s_max - correct <= n_bad:
            break
        s_max -= 1
    correct = int(round(q * s_max))
    return s_max, correct, s_max - correct


def generate(seed: int = 0, config: SyntheticConfig = SyntheticConfig()
             ) -> tuple[Dataset, list[tuple[int, int]], list[RuleSpec]]:
    """Return the dataset, contiguous split row ranges and the per-rule targets."""
    cfg = config
    rng = np.random.default_rng(seed)
    n = cfg.n
    labels = np.zeros(n, dtype=np.int8)
    labels[rng.choice(n, cfg.n_fraud, replace=False)] = 1
    fraud_rows = np.flatnonzero(labels == 1)
    legit_rows = np.flatnonzero(labels == 0)

    actions = [Action.ACCEPT] * cfg.n_accept + [Action.ALERT] * cfg.n_alert \
        + [Action.DECLINE] * cfg.n_decline
    fired = np.zeros((n, len(actions)), dtype=bool)
    rules, specs = [], []
    lo, hi = cfg.ratio_bounds
    width = len(str(len(actions)))
    for j, action in enumerate(actions):
        if action == Action.ACCEPT:
            s = rng.normal(*cfg.accept_support)
            q = rng.normal(*cfg.accept_npv)
            good, bad = legit_rows, fraud_rows
        else:
            s = rng.normal(*cfg.flag_support)
            q = rng.normal(*cfg.flag_precision)
            good, bad = fraud_rows, legit_rows
        s = int(min(max(round(s), 1), n))
        q = float(min(max(q, lo), hi))
        s, correct, incorrect = _fit(s, q, len(good), len(bad))
        fired[rng.choice(good, correct, replace=False), j] = True
        fired[rng.choice(bad, incorrect, replace=False), j] = True
        priority = int(rng.choice(ALPHABETS[action]))
        rules.append(Rule(f"R{j + 1:0{width}d}", action, priority))
        specs.append(RuleSpec(s, q, correct, incorrect))

    amap = ActionMap({p: a for a, ps in ALPHABETS.items() for p in ps})
    # row index as epoch seconds
    timestamps = np.arange(n, dtype=np.int64) * 1000
    data = validate_ruleset(rules, amap, TriggerMatrix(fired, timestamps, labels))
    bounds = np.linspace(0, n, cfg.n_splits + 1).round().astype(int)
    splits = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    return data, splits, specs
