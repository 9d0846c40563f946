"""Temporal cross-validation: sliding train/validation/test windows, reference
systems, and consistency of results across folds.

A fold is three consecutive periods; fold ``f`` starts at period ``f * stride``.
Periods are either a fixed number of rows or a duration measured from the
first timestamp.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .blacklist import BlacklistDependencyIndex, compute_blacklist_dependencies
from .core import INACTIVE, Dataset
from .evaluation import EvaluationReport, Evaluator
from .io import write_json, write_table, write_trace
from .losses import ConfigError, LossSpec
from .pipeline import RunConfig, RunResult, baseline_report, report_dict, run_pipeline
from .search import SearchProblem, StoppingCriteria, augment_dataset, optimize

logger = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")
RHO_GRID = tuple(round(0.04 * i, 2) for i in range(1, 25))


@dataclass(frozen=True)
class Fold:
    index: int
    train: tuple[int, int]
    validation: tuple[int, int]
    test: tuple[int, int]

    def split(self, name: str) -> tuple[int, int]:
        return getattr(self, name)


def _period_ms(period: "int | str") -> int:
    try:
        ms = pd.Timedelta(period) // pd.Timedelta(milliseconds=1)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse period {period!r}: {exc}") from None
    if ms <= 0:
        raise ConfigError(f"period must be positive, got {period!r}")
    return int(ms)


def period_bounds(timestamps: np.ndarray, period: "int | str") -> list[tuple[int, int]]:
    """Row ranges of consecutive periods. An int period counts rows, a string is a duration."""
    n = len(timestamps)
    if n == 0:
        return []
    if isinstance(period, (int, np.integer)) and not isinstance(period, bool):
        if period <= 0:
            raise ConfigError("period must be a positive row count")
        edges = list(range(0, n, int(period))) + [n]
    else:
        step = _period_ms(period)
        t0 = int(timestamps[0])
        count = math.ceil((int(timestamps[-1]) - t0 + 1) / step)
        cuts = t0 + step * np.arange(count + 1, dtype=np.int64)
        edges = np.searchsorted(timestamps, cuts, side="left").tolist()
        edges[-1] = n
    return [(a, b) for a, b in zip(edges[:-1], edges[1:])]


def make_folds(data: Dataset, period: "int | str", stride: int = 1) -> list[Fold]:
    ts = data.triggers.timestamps
    if np.any(np.diff(ts) < 0):
        raise ConfigError("timestamps must be sorted to build folds")
    if stride < 1:
        raise ConfigError("stride must be >= 1")
    periods = period_bounds(ts, period)
    if len(periods) < 3:
        raise ConfigError(f"need at least 3 periods for one fold, got {len(periods)}")
    folds = []
    for i, start in enumerate(range(0, len(periods) - 2, stride)):
        tr, va, te = periods[start:start + 3]
        folds.append(Fold(i, tr, va, te))
    return folds


def jaccard_removed(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def ndcg_consistency(q_ref: Sequence[str], q_other: Sequence[str]) -> float:
    """NDCG of ``q_other`` graded by position in ``q_ref`` (first rule is most relevant)."""
    if not q_ref or not q_other:
        raise ValueError("inclusion orders must be non-empty")
    size = len(q_ref)
    rel = {x: size - rank for rank, x in enumerate(q_ref, start=1)}
    dcg = sum(rel.get(x, 0) / math.log2(i + 1) for i, x in enumerate(q_other, start=1))
    ideal = sum((size - i) / math.log2(i + 1) for i in range(1, size + 1))
    if ideal == 0:
        return 1.0
    return dcg / ideal


def align_priorities(pool: Dataset, priorities: Mapping[str, int]
                     ) -> tuple[np.ndarray, list[str], list[str]]:
    """Vector over ``pool`` from an id map.

    Returns the vector, pool rules missing from the map (left off) and mapped ids
    that are not in the pool (they can never fire here).
    """
    ids = set(pool.rule_ids)
    missing = [r.id for r in pool.rules if r.id not in priorities]
    extra = sorted(set(priorities) - ids)
    return pool.from_priority_map(priorities), missing, extra


def all_off(data: Dataset) -> np.ndarray:
    """Only rules that cannot be switched off (mandatory or frozen) keep their priority."""
    p = data.original_priorities().copy()
    keep = np.array([r.mandatory or r.frozen for r in data.rules], dtype=bool)
    p[~keep] = INACTIVE
    return p


@dataclass
class SplitScores:
    """Reports of one system on each split of a fold, with losses relative to
    the deployed system on the same split."""

    reports: dict[str, EvaluationReport]
    delta: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {"reports": {k: v.to_dict() for k, v in self.reports.items()},
                "delta_loss": dict(self.delta)}


@dataclass
class FoldContext:
    """Shared per-fold state: split datasets, dependency slices and the all-on reports."""

    data: Dataset
    fold: Fold
    loss: LossSpec
    bd: BlacklistDependencyIndex
    parts: dict[str, Dataset] = field(init=False)
    part_bd: dict[str, BlacklistDependencyIndex] = field(init=False)
    reference: dict[str, EvaluationReport] = field(init=False)

    def __post_init__(self):
        self.parts = {s: self.data.rows(*self.fold.split(s)) for s in SPLITS}
        self.part_bd = {s: self.bd.rows(*self.fold.split(s)) for s in SPLITS}
        self.reference = {s: baseline_report(self.parts[s], self.loss, self.part_bd[s])
                          for s in SPLITS}

    def score(self, p: np.ndarray, pool: Dataset | None = None,
              splits: Sequence[str] = SPLITS) -> SplitScores:
        reports, delta = {}, {}
        for s in splits:
            part = self.parts[s] if pool is None else pool.rows(*self.fold.split(s))
            rep = Evaluator(part, self.part_bd[s]).report(p, self.loss, self.reference[s])
            reports[s] = rep
            delta[s] = rep.loss - self.reference[s].loss
        return SplitScores(reports, delta)


def run_baselines(
    ctx: FoldContext,
    rho_grid: Sequence[float] = RHO_GRID,
    evaluations: int = 10_000,
    seed: int = 0,
    threads: int = 1,
) -> dict[str, Any]:
    """All-on, all-off and tuned random search; each scored on every split.

    Random search runs on train once per grid value; the value with the lowest
    validation loss is kept (ties go to the smaller value).
    """
    out: dict[str, Any] = {
        "all_on": ctx.score(ctx.data.original_priorities()),
        "all_off": ctx.score(all_off(ctx.data)),
    }
    train = ctx.parts["train"]
    problem = SearchProblem(train, ctx.loss, ctx.reference["train"],
                            Evaluator(train, ctx.part_bd["train"]), threads=threads)
    best = None
    grid = []
    for rho in rho_grid:
        res = optimize("random", problem, {"rho": float(rho)},
                       StoppingCriteria(max_evaluations=evaluations), seed)
        val = ctx.score(res.p_best, splits=("validation",)).reports["validation"].loss
        grid.append({"rho": float(rho), "train_loss": res.best.loss, "validation_loss": val})
        if best is None or val < best[0]:
            best = (val, float(rho), res.p_best)
    if best is not None:
        out["random"] = ctx.score(best[2])
        out["random_rho"] = best[1]
    out["random_grid"] = grid
    return out


def cross_fold_eval(
    data: Dataset,
    folds: Sequence[Fold],
    systems: Sequence[Mapping[str, int]],
    loss: LossSpec,
    bd: BlacklistDependencyIndex | None = None,
) -> tuple[list[list[float | None]], list[str]]:
    """Loss of the system trained on fold ``i`` on the test set of every fold ``j >= i``.

    Rules absent from a system's map are treated as off; mapped ids absent from
    the data are ignored. Both cases are returned as warnings.
    """
    if bd is None:
        bd = compute_blacklist_dependencies(data.triggers, data.rules, data.original_priorities())
    pool = augment_dataset(data)
    plain = set(data.rule_ids)
    warnings: list[str] = []
    m = len(systems)
    table: list[list[float | None]] = [[None] * m for _ in range(m)]
    for i, pmap in enumerate(systems):
        target = data if set(pmap) <= plain else pool
        p, missing, extra = align_priorities(target, pmap)
        missing = [r for r in missing if target is data or "@" not in r]
        if missing:
            warnings.append(f"fold {i}: {len(missing)} rules missing from the system, "
                            f"treated as off: {missing[:10]}")
        if extra:
            warnings.append(f"fold {i}: {len(extra)} rules not in the data, never fire: "
                            f"{extra[:10]}")
        for j in range(i, m):
            a, b = folds[j].test
            part_bd = bd.rows(a, b)
            ref = baseline_report(data.rows(a, b), loss, part_bd)
            rep = Evaluator(target.rows(a, b), part_bd).report(p, loss, ref)
            table[i][j] = rep.loss
    for w in warnings:
        logger.warning(w)
    return table, warnings


def _matrix(values: Sequence[Sequence[float | None]], labels: Sequence[str]) -> list[dict]:
    rows = []
    for name, row in zip(labels, values):
        entry = {"fold": name}
        entry.update({lab: ("" if v is None else f"{v:.6f}") for lab, v in zip(labels, row)})
        rows.append(entry)
    return rows


def run_tcv(cfg: RunConfig, data: Dataset, out: "str | Path | None" = None,
            threads: int = 1) -> dict[str, Any]:
    """Optimize on every fold, score against the reference systems and compare folds."""
    folds_cfg = dict(cfg.folds)
    period = folds_cfg.get("period")
    if period is None:
        raise ConfigError("tcv needs folds.period (row count or duration)")
    folds = make_folds(data, period, int(folds_cfg.get("stride", 1)))
    bd = compute_blacklist_dependencies(data.triggers, data.rules, data.original_priorities())
    base_cfg = dict(cfg.baselines)
    do_baselines = bool(base_cfg.get("enabled", True))
    out_dir = Path(out) if out is not None else None

    fold_rows: list[dict] = []
    removed: list[list[str]] = []
    orders: list[list[str] | None] = []
    systems: list[dict[str, int]] = []
    per_fold: list[dict[str, Any]] = []
    for fold in folds:
        logger.info("fold %d: train %s validation %s test %s", fold.index, fold.train,
                    fold.validation, fold.test)
        ctx = FoldContext(data, fold, cfg.loss, bd)
        res: RunResult = run_pipeline(ctx.parts["train"], cfg.loss, cfg.method, cfg.theta,
                                      cfg.arp, cfg.seed, cfg.stopping, threads,
                                      ctx.part_bd["train"])
        scores = {"optimized": ctx.score(res.result.p_best, pool=(augment_dataset(data)
                                                                  if cfg.arp else None))}
        summary: dict[str, Any] = {"fold": fold.index, "rows": {s: list(fold.split(s))
                                                                for s in SPLITS}}
        if do_baselines:
            bl = run_baselines(ctx, base_cfg.get("rho_grid", RHO_GRID),
                               int(base_cfg.get("evaluations", 10_000)), cfg.seed, threads)
            for name in ("all_on", "all_off", "random"):
                if name in bl:
                    scores[name] = bl[name]
            summary["random_rho"] = bl.get("random_rho")
            summary["random_grid"] = bl["random_grid"]
        for name, sc in scores.items():
            for s in SPLITS:
                rep = sc.reports[s]
                fold_rows.append({
                    "fold": fold.index, "system": name, "split": s, "loss": rep.loss,
                    "delta_loss": sc.delta[s], "recall": rep.recall, "fpr": rep.fpr,
                    "alert_rate": rep.alert_rate, "rules_active": rep.rules_active,
                })
        summary["systems"] = {k: v.to_dict() for k, v in scores.items()}
        summary["removed_rules"] = res.removed_rules()
        removed.append(res.removed_rules())
        orders.append(None if res.result.inclusion_order is None
                      else [res.pool.rules[i].id for i in res.result.inclusion_order])
        systems.append(res.p_best)
        per_fold.append(summary)
        if out_dir is not None:
            fdir = out_dir / f"fold_{fold.index}"
            fdir.mkdir(parents=True, exist_ok=True)
            write_json(report_dict(cfg, res), fdir / "report.json")
            write_trace(res.result.trace, fdir / "trace.csv")

    m = len(folds)
    jac = [[jaccard_removed(removed[i], removed[j]) for j in range(m)] for i in range(m)]
    ndcg = None
    if all(o for o in orders):
        ndcg = [[ndcg_consistency(orders[i], orders[j]) for j in range(m)] for i in range(m)]
    cross, warnings = cross_fold_eval(data, folds, systems, cfg.loss, bd)
    result = {
        "config": cfg.to_dict(),
        "folds": per_fold,
        "jaccard": jac,
        "ndcg": ndcg,
        "cross_fold_test_loss": cross,
        "warnings": warnings,
        "delta_reference": "all_on scored on the same split",
    }
    if out_dir is not None:
        labels = [str(f.index) for f in folds]
        write_table(fold_rows, out_dir / "folds.csv")
        write_table(_matrix(jac, labels), out_dir / "jaccard.csv")
        if ndcg is not None:
            write_table(_matrix(ndcg, labels), out_dir / "ndcg.csv")
        write_table(_matrix(cross, labels), out_dir / "cross_fold.csv")
        write_json(result, out_dir / "summary.json")
    return result
