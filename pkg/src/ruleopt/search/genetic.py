"""Genetic search over priority vectors.

Each generation keeps the best ``ceil(survivors * population)`` individuals and
refills the population with children: uniform crossover of two survivors drawn
with replacement, then per-gene mutation. Survivors are carried over with
their evaluation and count toward the budget again, so ``r`` generations cost
exactly ``r * population`` evaluations.
"""
from __future__ import annotations

import math
from typing import Any, Mapping

import numpy as np

from ..core import INACTIVE
from ..losses import ConfigError
from .base import SearchProblem, SearchResult, StoppingCriteria, Tracker, candidate_rng, \
    check_unit, reject_unknown, resolve_aliases
from .pool import random_priority_shuffle

MUTATIONS = ("flip", "shuffle")


def initial_individual(problem: SearchProblem, rho: float, rng: np.random.Generator) -> np.ndarray:
    p = problem.start.copy()
    off = rng.random(problem.k) < rho
    p[off & ~problem.frozen & ~problem.mandatory] = INACTIVE
    return p


def crossover(mother: np.ndarray, father: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return np.where(rng.random(mother.shape[0]) < 0.5, father, mother)


def mutate(problem: SearchProblem, child: np.ndarray, rho: float, mode: str,
           rng: np.random.Generator) -> np.ndarray:
    """Flip mode toggles a gene between off and its own priority; shuffle mode
    moves an active gene to another level with the same action."""
    hit = (rng.random(problem.k) < rho) & ~problem.frozen
    out = child.copy()
    if mode == "flip":
        hit &= ~problem.mandatory
        out[hit] = np.where(child[hit] > INACTIVE, INACTIVE, problem.home[hit])
    else:
        for i in np.flatnonzero(hit & (child > INACTIVE)):
            out[i] = random_priority_shuffle(int(child[i]), problem.rules[i].action,
                                             problem.amap, rng)
    return out


def make_child(problem: SearchProblem, survivors: list[np.ndarray], rho: float, mode: str,
               rng: np.random.Generator) -> np.ndarray:
    mother = survivors[rng.integers(len(survivors))]
    father = survivors[rng.integers(len(survivors))]
    return mutate(problem, crossover(mother, father, rng), rho, mode, rng)


ALIASES = {"psi": "population", "alpha": "survivors", "rho": "mutation", "r": "runs"}


def genetic_search(
    problem: SearchProblem,
    theta: Mapping[str, Any],
    stopping: StoppingCriteria,
    seed: int = 0,
    observer=None,
) -> SearchResult:
    theta = resolve_aliases(theta, ALIASES)
    reject_unknown(theta, ("population", "survivors", "mutation", "runs", "mutation_mode"),
                   "genetic")
    psi = int(theta.get("population", 30))
    alpha = check_unit("survivors", theta.get("survivors", 0.05), open_low=True, open_high=True)
    rho = check_unit("mutation", theta.get("mutation", 0.1))
    runs = theta.get("runs")
    mode = theta.get("mutation_mode", "flip")
    if psi < 2:
        raise ConfigError("population must be >= 2")
    if runs is not None and int(runs) < 1:
        raise ConfigError("runs must be >= 1")
    if mode not in MUTATIONS:
        raise ConfigError(f"mutation_mode must be one of {MUTATIONS}")
    n_keep = max(1, math.ceil(alpha * psi - 1e-9))

    tracker = Tracker(problem, stopping, observer)
    ordinal = 0
    population = []
    for _ in range(psi):
        population.append(initial_individual(problem, rho, candidate_rng(seed, ordinal)))
        ordinal += 1
    size = tracker.clip(psi)
    reports = problem.evaluate_many(population[:size])
    taken = tracker.offer_many(population, reports)
    generation = 1
    while taken == psi and not tracker.exhausted():
        if runs is not None and generation >= int(runs):
            break
        ranked = sorted(range(psi), key=lambda i: (reports[i].loss, i))[:n_keep]
        survivors = [population[i] for i in ranked]
        kept = [reports[i] for i in ranked]
        children = []
        for _ in range(psi - n_keep):
            children.append(make_child(problem, survivors, rho, mode,
                                       candidate_rng(seed, ordinal)))
            ordinal += 1
        n_children = min(len(children), max(0, tracker.clip(psi) - n_keep))
        child_reports = problem.evaluate_many(children[:n_children])
        population = survivors + children
        reports = kept + child_reports
        taken = tracker.offer_many(population, reports)
        generation += 1
    return tracker.result("genetic")
