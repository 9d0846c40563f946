"""Random search: independent perturbations of the deployed configuration."""
from __future__ import annotations

from typing import Any, Mapping

import numpy as np

from ..core import INACTIVE
from .base import SearchProblem, SearchResult, StoppingCriteria, Tracker, candidate_rng, \
    check_unit, reject_unknown
from .pool import random_priority_shuffle

BATCH = 256


def random_candidate(problem: SearchProblem, rho: float, gamma: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Shuffle each active rule with probability ``gamma``, then switch it off with ``rho``."""
    p = problem.start.copy()
    k = problem.k
    shuffle = rng.random(k) < gamma
    off = rng.random(k) < rho
    for i in np.flatnonzero(shuffle & ~problem.frozen & (p > INACTIVE)):
        p[i] = random_priority_shuffle(int(p[i]), problem.rules[i].action, problem.amap, rng)
    p[off & ~problem.frozen & ~problem.mandatory] = INACTIVE
    return p


def random_search(
    problem: SearchProblem,
    theta: Mapping[str, Any],
    stopping: StoppingCriteria,
    seed: int = 0,
    observer=None,
) -> SearchResult:
    reject_unknown(theta, ("rho", "gamma"), "random search")
    rho = check_unit("rho", theta.get("rho", 0.5))
    gamma = check_unit("gamma", theta.get("gamma", 0.0))
    tracker = Tracker(problem, stopping, observer)
    ordinal = 0
    while not tracker.exhausted():
        size = tracker.clip(BATCH * problem.threads)
        batch = [
            random_candidate(problem, rho, gamma, candidate_rng(seed, ordinal + i))
            for i in range(size)
        ]
        ordinal += size
        tracker.offer_many(batch, problem.evaluate_many(batch))
    return tracker.result("random")
