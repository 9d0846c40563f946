"""Greedy expansion with optional contraction steps."""
from __future__ import annotations

from typing import Any, Mapping

import numpy as np

from ..core import INACTIVE
from ..losses import ConfigError
from .base import SearchProblem, SearchResult, StoppingCriteria, Tracker, reject_unknown


def _argmin(reports) -> int:
    # strict comparison keeps the lowest index on ties
    best = 0
    for i, rep in enumerate(reports):
        if rep.loss < reports[best].loss:
            best = i
    return best


def greedy_expansion(
    problem: SearchProblem,
    theta: Mapping[str, Any],
    stopping: StoppingCriteria,
    seed: int = 0,
    observer=None,
) -> SearchResult:
    """Start from the mandatory/frozen-only system and switch rules on one at a time.

    Each round tries every remaining rule at its own priority and commits the
    one with the lowest loss. With ``backtracking`` every ``contract_every``
    commits, up to ``contract_count`` rules are removed again, each time the
    one whose removal lowers the loss most (only if it does). Removed rules
    are not offered again.
    """
    reject_unknown(theta, ("backtracking", "contract_every", "contract_count"), "greedy")
    backtracking = bool(theta.get("backtracking", False))
    every = int(theta.get("contract_every", max(1, problem.k // 10)))
    count = int(theta.get("contract_count", 1))
    if every < 1 or count < 1:
        raise ConfigError("contract_every and contract_count must be >= 1")

    tracker = Tracker(problem, stopping, observer)
    fixed = problem.frozen | problem.mandatory
    current = np.where(fixed, problem.start, INACTIVE)
    order: list[int] = []
    dropped: set[int] = set()
    if tracker.exhausted():
        return tracker.result("greedy", inclusion_order=order)
    current_rep = problem.evaluate(current)
    tracker.offer(current, current_rep)

    candidates = [j for j in range(problem.k) if not fixed[j]]
    while not tracker.exhausted():
        remaining = [j for j in candidates if current[j] == INACTIVE and j not in dropped]
        if not remaining:
            break
        remaining = remaining[: tracker.clip(len(remaining))]
        trials = []
        for j in remaining:
            p = current.copy()
            p[j] = problem.home[j]
            trials.append(p)
        reports = problem.evaluate_many(trials)
        taken = tracker.offer_many(trials, reports)
        if taken < len(trials):
            break
        pick = _argmin(reports)
        current, current_rep = trials[pick], reports[pick]
        order.append(remaining[pick])

        if backtracking and len(order) % every == 0:
            for _ in range(count):
                if len(order) < 2 or tracker.exhausted():
                    break
                drops = order[: tracker.clip(len(order))]
                trials = []
                for j in drops:
                    p = current.copy()
                    p[j] = INACTIVE
                    trials.append(p)
                reports = problem.evaluate_many(trials)
                tracker.offer_many(trials, reports)
                pick = _argmin(reports)
                if reports[pick].loss < current_rep.loss:
                    current, current_rep = trials[pick], reports[pick]
                    dropped.add(drops[pick])
                    order.remove(drops[pick])
                else:
                    break

    return tracker.result("greedy", inclusion_order=order)
