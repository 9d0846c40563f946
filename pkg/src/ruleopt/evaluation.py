"""Evaluate candidate priority vectors over a trigger matrix.

Per transaction: mask the firings with the candidate, drop blacklist checkers
whose enablers are off, take the highest active priority, map it to an
action (accept when nothing fires) and score the action against the label.

``Evaluator`` compiles the trigger matrix once into row-sorted sparse entries
so that each candidate costs a gather, one segmented max and a bincount over
the fired cells only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

from .blacklist import BlacklistDependencyIndex, handle_bd
from .core import INACTIVE, Action, ActionMap, Dataset, mask

if TYPE_CHECKING:
    from .losses import LossSpec


class Outcome(enum.Enum):
    TP = "TP"
    FP = "FP"
    TN = "TN"
    FN = "FN"


def decide(r2: Sequence[int], amap: ActionMap) -> Action:
    top = max(r2, default=INACTIVE)
    if top <= INACTIVE:
        return Action.ACCEPT
    return amap[top]


def get_truth_value(decision: Action, label: int) -> Outcome:
    if Action.parse(decision) == Action.ACCEPT:
        return Outcome.FN if label else Outcome.TN
    return Outcome.TP if label else Outcome.FP


@dataclass(frozen=True)
class EvaluationReport:
    """Decision-by-label counts plus derived metrics.

    ``counts[a, l]`` is the number of transactions with decision ``a``
    (accept/alert/decline rows) and label ``l``. Recall with no fraud and FPR
    with no legitimate rows are reported as 0 and flagged in ``undefined``.
    """

    counts: np.ndarray
    rules_active: int
    pool_size: int
    loss: float = 0.0
    undefined: tuple[str, ...] = field(default=())

    @classmethod
    def from_counts(
        cls, counts: np.ndarray, rules_active: int, pool_size: int
    ) -> "EvaluationReport":
        counts = np.asarray(counts, dtype=np.int64).reshape(3, 2)
        counts.setflags(write=False)
        undefined = []
        if counts[:, 1].sum() == 0:
            undefined.append("recall")
        if counts[:, 0].sum() == 0:
            undefined.append("fpr")
        return cls(counts, int(rules_active), int(pool_size), 0.0, tuple(undefined))

    def with_loss(self, loss: float) -> "EvaluationReport":
        return EvaluationReport(self.counts, self.rules_active, self.pool_size, float(loss),
                                self.undefined)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def tp(self) -> int:
        return int(self.counts[1, 1] + self.counts[2, 1])

    @property
    def fp(self) -> int:
        return int(self.counts[1, 0] + self.counts[2, 0])

    @property
    def tn(self) -> int:
        return int(self.counts[0, 0])

    @property
    def fn(self) -> int:
        return int(self.counts[0, 1])

    @property
    def recall(self) -> float:
        pos = self.tp + self.fn
        return self.tp / pos if pos else 0.0

    @property
    def fpr(self) -> float:
        neg = self.fp + self.tn
        return self.fp / neg if neg else 0.0

    @property
    def alert_rate(self) -> float:
        n = self.n
        return int(self.counts[1].sum()) / n if n else 0.0

    @property
    def rules_active_fraction(self) -> float:
        return self.rules_active / self.pool_size if self.pool_size else 0.0

    def metric(self, name: str) -> float:
        from .losses import canonical_metric

        name = canonical_metric(name)
        if name == "rules":
            return self.rules_active_fraction
        return float(getattr(self, {"alerts": "alert_rate"}.get(name, name)))

    def same_as(self, other: "EvaluationReport") -> bool:
        return (
            np.array_equal(self.counts, other.counts)
            and self.rules_active == other.rules_active
            and self.pool_size == other.pool_size
            and self.loss == other.loss
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "counts": {
                str(a): {"legit": int(self.counts[a, 0]), "fraud": int(self.counts[a, 1])}
                for a in Action
            },
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "recall": self.recall,
            "fpr": self.fpr,
            "alert_rate": self.alert_rate,
            "rules_active": self.rules_active,
            "pool_size": self.pool_size,
            "rules_active_fraction": self.rules_active_fraction,
            "loss": self.loss,
            "undefined": list(self.undefined),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvaluationReport":
        counts = np.array(
            [[d["counts"][str(a)]["legit"], d["counts"][str(a)]["fraud"]] for a in Action]
        )
        rep = cls.from_counts(counts, d["rules_active"], d["pool_size"])
        return rep.with_loss(d["loss"])


class Evaluator:
    """Reusable, thread-safe evaluator bound to one dataset and dependency index.

    Columns that share an original rule (clones in an augmented pool) form a
    group. The active-rule count is the number of groups with an active
    column, and a blacklist enabler counts as active when any column of its
    group is. Dependency pairs refer to the original columns.
    """

    def __init__(self, data: Dataset, bd: BlacklistDependencyIndex | None = None):
        self.data = data
        self.amap = data.amap
        self.k = data.k
        tm = data.triggers
        labels = tm.labels.astype(np.int64)

        index = data.index_of()
        self.rep = np.array([index[r.group] for r in data.rules], dtype=np.intp)
        _, self.groups = np.unique(self.rep, return_inverse=True)
        self.groups = self.groups.astype(np.intp)
        self.n_groups = int(self.groups.max()) + 1 if self.k else 0

        rows, cols = np.nonzero(tm.fired)
        self._cols = cols.astype(np.intp)
        nonempty = np.zeros(tm.n, dtype=bool)
        nonempty[rows] = True
        self._starts = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]]) if rows.size else rows
        self._row_labels = labels[nonempty]
        self._base_counts = np.zeros(6, dtype=np.int64)
        self._base_counts[:2] = np.bincount(labels[~nonempty], minlength=2)[:2]

        # checker entries and the groups that enable them, flattened
        self._chk_entries = np.zeros(0, dtype=np.intp)
        self._dep_groups = np.zeros(0, dtype=np.intp)
        self._dep_starts = np.zeros(0, dtype=np.intp)
        checkers = np.array([r.is_checker for r in data.rules], dtype=bool)
        if bd is not None and checkers.any():
            entries, deps, starts = [], [], []
            for e in np.flatnonzero(checkers[cols]).tolist():
                x, q0 = int(rows[e]), int(self.rep[cols[e]])
                en = sorted({int(self.groups[j]) for j, c in bd[x] if c == q0})
                entries.append(e)
                starts.append(len(deps))
                # no enabler at all: point at an always-off sentinel group
                deps.extend(en if en else [self.n_groups])
            self._chk_entries = np.asarray(entries, dtype=np.intp)
            self._dep_groups = np.asarray(deps, dtype=np.intp)
            self._dep_starts = np.asarray(starts, dtype=np.intp)
        self._bd = bd
        self._checkers = np.flatnonzero(checkers).tolist()

    def group_active(self, p: np.ndarray) -> np.ndarray:
        on = np.zeros(self.n_groups + 1, dtype=bool)
        on[self.groups[np.asarray(p) > INACTIVE]] = True
        return on

    def counts(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=np.int64)
        out = self._base_counts.copy()
        if self._cols.size:
            pr = p[self._cols]
            if self._chk_entries.size:
                alive = np.logical_or.reduceat(
                    self.group_active(p)[self._dep_groups], self._dep_starts
                )
                pr[self._chk_entries[~alive]] = INACTIVE
            top = np.maximum.reduceat(pr, self._starts)
            act = self.amap.lut[top + 1].astype(np.int64)
            out += np.bincount(act * 2 + self._row_labels, minlength=6)
        return out.reshape(3, 2)

    def rules_active(self, p: np.ndarray) -> int:
        return int(self.group_active(p)[:-1].sum())

    def report(
        self,
        p: np.ndarray,
        loss: "LossSpec | None" = None,
        baseline: EvaluationReport | None = None,
    ) -> EvaluationReport:
        rep = EvaluationReport.from_counts(self.counts(p), self.rules_active(p), self.n_groups)
        if loss is None:
            return rep
        return rep.with_loss(loss(rep, baseline))

    def decisions(self, p: np.ndarray) -> np.ndarray:
        """Per-row action codes via the literal mask / handle_bd / decide steps (slow)."""
        tm = self.data.triggers
        p = np.asarray(p, dtype=np.int64)
        # enabler activity lives on the original columns
        p_enabler = np.full(self.k, INACTIVE, dtype=np.int64)
        on = self.group_active(p)
        p_enabler[self.rep] = np.where(on[self.groups], 0, INACTIVE)
        members: dict[int, list[int]] = {}
        for i, r0 in enumerate(self.rep.tolist()):
            members.setdefault(r0, []).append(i)
        out = np.empty(tm.n, dtype=np.int8)
        for x in range(tm.n):
            r2 = r1 = mask(tm.fired[x], p)
            if self._bd is not None and self._checkers:
                pairs = [(j, c) for j, q in self._bd[x] for c in members.get(q, [q])]
                r2 = handle_bd(r1, pairs, p_enabler, self._checkers)
            out[x] = int(decide(r2, self.amap))
        return out


def evaluate(
    data: Dataset,
    p: np.ndarray,
    bd: BlacklistDependencyIndex | None = None,
    loss: "LossSpec | None" = None,
    baseline: EvaluationReport | None = None,
) -> EvaluationReport:
    """One-shot evaluation; build an ``Evaluator`` instead when scoring many candidates."""
    return Evaluator(data, bd).report(p, loss, baseline)


def evaluate_rowwise(
    data: Dataset,
    p: np.ndarray,
    bd: BlacklistDependencyIndex | None = None,
) -> np.ndarray:
    """Count matrix from the per-row procedure, bypassing the compiled path."""
    dec = Evaluator(data, bd).decisions(p)
    counts = np.zeros((3, 2), dtype=np.int64)
    np.add.at(counts, (dec.astype(np.intp), data.triggers.labels.astype(np.intp)), 1)
    return counts
