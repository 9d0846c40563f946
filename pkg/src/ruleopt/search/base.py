"""Shared search machinery: problem binding, stopping rules, best-so-far tracking."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from ..core import INACTIVE, Dataset, check_priority_vector
from ..evaluation import EvaluationReport, Evaluator
from ..losses import ConfigError, LossSpec

DEFAULT_MAX_EVALUATIONS = 10_000


def candidate_rng(seed: int, ordinal: int) -> np.random.Generator:
    """Counter-based stream for one candidate; independent of scheduling."""
    key = np.array([int(seed) % 2**64, int(ordinal) % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class StoppingCriteria:
    """Stop after ``max_evaluations``, after ``max_seconds``, or once the best
    loss improved by less than ``epsilon`` over the last ``window`` evaluations."""

    max_evaluations: int | None = DEFAULT_MAX_EVALUATIONS
    max_seconds: float | None = None
    epsilon: float | None = None
    window: int | None = None

    def __post_init__(self):
        if self.max_evaluations is None and self.max_seconds is None and self.epsilon is None:
            raise ConfigError("at least one stopping criterion must be set")
        if self.max_evaluations is not None and self.max_evaluations < 0:
            raise ConfigError("max_evaluations must be >= 0")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ConfigError("max_seconds must be positive")
        if (self.epsilon is None) != (self.window is None):
            raise ConfigError("epsilon and window go together")
        if self.epsilon is not None and (self.epsilon <= 0 or self.window <= 0):
            raise ConfigError("epsilon and window must be positive")

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any] | None) -> "StoppingCriteria":
        if not cfg:
            return cls()
        unknown = set(cfg) - {"max_evaluations", "max_seconds", "epsilon", "window"}
        if unknown:
            raise ConfigError(f"unknown stopping keys {sorted(unknown)}")
        return cls(
            max_evaluations=cfg.get("max_evaluations"),
            max_seconds=cfg.get("max_seconds"),
            epsilon=cfg.get("epsilon"),
            window=cfg.get("window"),
        )

    def to_config(self) -> dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class SearchResult:
    p_best: np.ndarray
    best: EvaluationReport
    trace: np.ndarray  # rows of (eval_index, candidate_loss, best_loss)
    evaluations: int
    method: str
    inclusion_order: list[int] | None = None

    def removed(self, rule_ids: Sequence[str]) -> set[str]:
        return {rule_ids[i] for i in np.flatnonzero(self.p_best == INACTIVE)}


class SearchProblem:
    """Everything a search method needs, bound once.

    ``start`` is the configuration to beat (the deployed system embedded in
    the pool under optimization) and ``home`` holds each column's own
    priority, the level a column takes when switched on.
    """

    def __init__(
        self,
        data: Dataset,
        loss: LossSpec,
        baseline: EvaluationReport | None = None,
        evaluator: Evaluator | None = None,
        start: np.ndarray | None = None,
        threads: int = 1,
        check_candidates: bool = False,
    ):
        self.data = data
        self.rules = data.rules
        self.amap = data.amap
        self.loss = loss
        self.evaluator = evaluator if evaluator is not None else Evaluator(data)
        self.home = data.original_priorities()
        self.start = self.home.copy() if start is None else np.asarray(start, dtype=np.int64)
        check_priority_vector(self.start, self.rules, self.amap)
        self.mandatory = np.array([r.mandatory for r in self.rules], dtype=bool)
        self.frozen = np.array([r.frozen for r in self.rules], dtype=bool)
        if baseline is None:
            raw = self.evaluator.report(self.start)
            baseline = raw.with_loss(loss(raw, raw))
        self.baseline = baseline
        self.threads = max(1, int(threads))
        self.check_candidates = check_candidates
        self.start_report = self.evaluate(self.start)

    @property
    def k(self) -> int:
        return len(self.rules)

    def evaluate(self, p: np.ndarray) -> EvaluationReport:
        if self.check_candidates:
            check_priority_vector(p, self.rules, self.amap)
        return self.evaluator.report(p, self.loss, self.baseline)

    def evaluate_many(self, vectors: Sequence[np.ndarray]) -> list[EvaluationReport]:
        if self.threads == 1 or len(vectors) < 2:
            return [self.evaluate(v) for v in vectors]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(self.evaluate, vectors))


class Tracker:
    """Counts evaluations, keeps the incumbent and records the trace.

    A candidate replaces the incumbent only with a strictly lower loss.
    """

    def __init__(self, problem: SearchProblem, stopping: StoppingCriteria,
                 observer: Callable[[int, float, float], None] | None = None):
        self.problem = problem
        self.stopping = stopping
        self.p_best = problem.start.copy()
        self.best = problem.start_report
        self.evaluations = 0
        self._trace: list[tuple[int, float, float]] = []
        self._t0 = time.monotonic()
        self._observer = observer

    @property
    def best_loss(self) -> float:
        return self.best.loss

    def remaining(self) -> float:
        if self.stopping.max_evaluations is None:
            return math.inf
        return max(0, self.stopping.max_evaluations - self.evaluations)

    def exhausted(self) -> bool:
        s = self.stopping
        if s.max_evaluations is not None and self.evaluations >= s.max_evaluations:
            return True
        if s.max_seconds is not None and time.monotonic() - self._t0 >= s.max_seconds:
            return True
        if s.epsilon is not None and self.evaluations >= s.window:
            m = self.evaluations - s.window
            before = self._trace[m - 1][2] if m > 0 else self.problem.start_report.loss
            if before - self.best_loss < s.epsilon:
                return True
        return False

    def offer(self, p: np.ndarray, report: EvaluationReport) -> bool:
        """Record one evaluation; return True if it became the incumbent."""
        self.evaluations += 1
        improved = report.loss < self.best.loss
        if improved:
            self.best = report
            self.p_best = np.array(p, dtype=np.int64, copy=True)
        self._trace.append((self.evaluations, report.loss, self.best.loss))
        if self._observer is not None:
            self._observer(self.evaluations, report.loss, self.best.loss)
        return improved

    def offer_many(self, vectors: Sequence[np.ndarray],
                   reports: Iterable[EvaluationReport]) -> int:
        """Offer in order until the budget runs out; return how many were taken."""
        taken = 0
        for p, rep in zip(vectors, reports):
            if self.exhausted():
                break
            self.offer(p, rep)
            taken += 1
        return taken

    def clip(self, batch: int) -> int:
        rem = self.remaining()
        return int(min(batch, rem)) if rem != math.inf else batch

    def trace(self) -> np.ndarray:
        if not self._trace:
            return np.zeros((0, 3))
        return np.array(self._trace, dtype=float)

    def result(self, method: str, **extra) -> SearchResult:
        return SearchResult(self.p_best, self.best, self.trace(), self.evaluations, method, **extra)


def check_unit(name: str, value: Any, *, open_low: bool = False, open_high: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    lo_ok = v > 0 if open_low else v >= 0
    hi_ok = v < 1 if open_high else v <= 1
    if not (lo_ok and hi_ok):
        raise ConfigError(f"{name}={v} out of range")
    return v


def reject_unknown(theta: Mapping[str, Any], allowed: Iterable[str], method: str) -> None:
    unknown = set(theta) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {method} parameters {sorted(unknown)}")


def resolve_aliases(theta: Mapping[str, Any], aliases: Mapping[str, str]) -> dict[str, Any]:
    """Rename short parameter names (``rho`` etc.) to their long form."""
    out = dict(theta)
    for short, long in aliases.items():
        if short in out:
            if long in out:
                raise ConfigError(f"both {short!r} and {long!r} given")
            out[long] = out.pop(short)
    return out
