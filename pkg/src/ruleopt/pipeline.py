"""End-to-end run: dependencies, baseline, optional pool augmentation, search.

``run_pipeline`` works in memory; ``run`` adds the run configuration file
handling and writes the run directory (``report.json``, ``trace.csv``).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .blacklist import BlacklistDependencyIndex, compute_blacklist_dependencies
from .core import Dataset
from .evaluation import EvaluationReport, Evaluator
from .io import write_json, write_trace
from .losses import ConfigError, LossSpec
from .search import SearchProblem, SearchResult, StoppingCriteria, augment_dataset, embed, \
    optimize

logger = logging.getLogger(__name__)

CONFIG_KEYS = {"method", "loss", "theta", "arp", "seed", "stopping", "folds", "data", "train",
               "validation", "baselines"}


@dataclass
class RunConfig:
    method: str = "genetic"
    loss: LossSpec = field(default_factory=lambda: LossSpec.from_config("synthetic"))
    theta: dict[str, Any] = field(default_factory=dict)
    arp: bool = False
    seed: int = 0
    stopping: StoppingCriteria = field(default_factory=StoppingCriteria)
    folds: dict[str, Any] = field(default_factory=dict)
    data: str | None = None
    train: tuple[int, int] | None = None
    validation: tuple[int, int] | None = None
    baselines: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, cfg: Mapping[str, Any]) -> "RunConfig":
        if not isinstance(cfg, Mapping):
            raise ConfigError("run configuration must be a JSON object")
        unknown = set(cfg) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")

        def rows(key):
            v = cfg.get(key)
            if v is None:
                return None
            if not (isinstance(v, (list, tuple)) and len(v) == 2):
                raise ConfigError(f"{key} must be [start, stop]")
            return int(v[0]), int(v[1])

        seed = cfg.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        return cls(
            method=str(cfg.get("method", "genetic")),
            loss=LossSpec.from_config(cfg.get("loss", "synthetic")),
            theta=dict(cfg.get("theta") or {}),
            arp=bool(cfg.get("arp", False)),
            seed=seed,
            stopping=StoppingCriteria.from_config(cfg.get("stopping")),
            folds=dict(cfg.get("folds") or {}),
            data=cfg.get("data"),
            train=rows("train"),
            validation=rows("validation"),
            baselines=dict(cfg.get("baselines") or {}),
        )

    @classmethod
    def load(cls, path: "str | Path") -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "loss": self.loss.to_config(),
            "theta": self.theta,
            "arp": self.arp,
            "seed": self.seed,
            "stopping": self.stopping.to_config(),
            "folds": self.folds,
            "data": self.data,
            "train": list(self.train) if self.train else None,
            "validation": list(self.validation) if self.validation else None,
            "baselines": self.baselines,
        }


@dataclass
class RunResult:
    data: Dataset
    pool: Dataset
    bd: BlacklistDependencyIndex
    baseline: EvaluationReport
    result: SearchResult

    @property
    def p_best(self) -> dict[str, int]:
        return self.pool.to_priority_map(self.result.p_best)

    def removed_rules(self) -> list[str]:
        """Original rules with no active column in the best configuration."""
        on = {r.group for r, v in zip(self.pool.rules, self.result.p_best) if v > -1}
        return [r.id for r in self.data.rules if r.id not in on]


def baseline_report(data: Dataset, loss: LossSpec, bd: BlacklistDependencyIndex | None = None,
                    evaluator: Evaluator | None = None) -> EvaluationReport:
    """The deployed system scored against itself (the reference for constrained losses)."""
    ev = evaluator or Evaluator(data, bd)
    raw = ev.report(data.original_priorities())
    return raw.with_loss(loss(raw, raw))


def run_pipeline(
    data: Dataset,
    loss: LossSpec,
    method: str,
    theta: Mapping[str, Any] | None = None,
    arp: bool = False,
    seed: int = 0,
    stopping: StoppingCriteria | None = None,
    threads: int = 1,
    bd: BlacklistDependencyIndex | None = None,
    observer=None,
) -> RunResult:
    if bd is None:
        bd = compute_blacklist_dependencies(data.triggers, data.rules, data.original_priorities())
    baseline = baseline_report(data, loss, bd)
    pool, start = data, data.original_priorities()
    if arp:
        pool = augment_dataset(data)
        start = embed(start, pool.k)
        logger.info("augmented pool: %d -> %d columns", data.k, pool.k)
    problem = SearchProblem(pool, loss, baseline, Evaluator(pool, bd), start, threads)
    result = optimize(method, problem, theta, stopping, seed, observer)
    return RunResult(data, pool, bd, baseline, result)


def score_rows(data: Dataset, pool: Dataset, bd: BlacklistDependencyIndex,
               rows: tuple[int, int], p: np.ndarray,
               loss: LossSpec) -> tuple[EvaluationReport, EvaluationReport]:
    """Score the deployed system and ``p`` (a vector over ``pool``) on a row range.

    ``bd`` covers all rows of ``data`` so blacklist history before the range
    is respected.
    """
    a, b = rows
    part_bd = bd.rows(a, b)
    base = baseline_report(data.rows(a, b), loss, part_bd)
    best = Evaluator(pool.rows(a, b), part_bd).report(p, loss, base)
    return base, best


def report_dict(cfg: RunConfig, run: RunResult, validation=None) -> dict[str, Any]:
    out = {
        "config": cfg.to_dict(),
        "pool_size": run.pool.k,
        "rules": run.data.k,
        "baseline": run.baseline.to_dict(),
        "best": run.result.best.to_dict(),
        "p_best": run.p_best,
        "removed_rules": run.removed_rules(),
        "evaluations": run.result.evaluations,
        "blacklist_issues": len(run.bd.issues),
    }
    if run.result.inclusion_order is not None:
        out["inclusion_order"] = [run.pool.rules[i].id for i in run.result.inclusion_order]
    if validation is not None:
        base, best = validation
        out["validation"] = {"rows": list(cfg.validation), "baseline": base.to_dict(),
                             "best": best.to_dict()}
    return out


def run(cfg: RunConfig, data: Dataset, out: "str | Path | None" = None,
        threads: int = 1) -> dict[str, Any]:
    """Execute a configured run; write ``report.json`` and ``trace.csv`` under ``out``."""
    bd = compute_blacklist_dependencies(data.triggers, data.rules, data.original_priorities())
    train = data
    train_bd = bd
    if cfg.train is not None:
        train = data.rows(*cfg.train)
        train_bd = bd.rows(*cfg.train)
    res = run_pipeline(train, cfg.loss, cfg.method, cfg.theta, cfg.arp, cfg.seed, cfg.stopping,
                       threads, train_bd)
    validation = None
    if cfg.validation is not None:
        pool = augment_dataset(data) if cfg.arp else data
        validation = score_rows(data, pool, bd, cfg.validation, res.result.p_best, cfg.loss)
    report = report_dict(cfg, res, validation)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(report, out / "report.json")
        write_trace(res.result.trace, out / "trace.csv")
    return report
