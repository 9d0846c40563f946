from typing import Any, Mapping

from ..losses import ConfigError
from .base import SearchProblem, SearchResult, StoppingCriteria, Tracker, candidate_rng
from .genetic import genetic_search
from .greedy import greedy_expansion
from .pool import augment_dataset, augment_rules_pool, embed, random_priority_shuffle
from .random_search import random_search

METHODS = {
    "random": random_search,
    "greedy": greedy_expansion,
    "genetic": genetic_search,
}


def optimize(
    method: str,
    problem: SearchProblem,
    theta: Mapping[str, Any] | None = None,
    stopping: StoppingCriteria | None = None,
    seed: int = 0,
    observer=None,
) -> SearchResult:
    """Run one search method; the incumbent starts as ``problem.start``."""
    try:
        fn = METHODS[method]
    except KeyError:
        raise ConfigError(f"unknown method {method!r}; expected one of {sorted(METHODS)}") from None
    return fn(problem, dict(theta or {}), stopping or StoppingCriteria(), seed, observer)


__all__ = [
    "METHODS",
    "SearchProblem",
    "SearchResult",
    "StoppingCriteria",
    "Tracker",
    "augment_dataset",
    "augment_rules_pool",
    "candidate_rng",
    "embed",
    "genetic_search",
    "greedy_expansion",
    "optimize",
    "random_priority_shuffle",
    "random_search",
]
