"""Domain model: rules, actions, priorities, trigger data and candidate vectors.

Triggers are kept as a boolean ``n x k`` matrix. A candidate configuration is a
separate integer vector with one priority per column, ``-1`` meaning the rule
is switched off. Combining the two (``mask``) yields the priority-valued row
that the decision step consumes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

INACTIVE = -1


class Action(enum.IntEnum):
    """Rule outcome. The integer value doubles as a row index in count matrices."""

    ACCEPT = 0
    ALERT = 1
    DECLINE = 2

    @classmethod
    def parse(cls, value: "str | Action") -> "Action":
        if isinstance(value, Action):
            return value
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown action {value!r}") from None

    def __str__(self) -> str:
        return self.name.lower()


class ValidationError(ValueError):
    """Raised when a dataset bundle violates one or more model invariants.

    ``violations`` holds every problem found, not only the first one.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) if self.violations else "invalid bundle")


@dataclass(frozen=True)
class Rule:
    id: str
    action: Action
    original_priority: int
    mandatory: bool = False
    frozen: bool = False
    updates_fields: frozenset[str] = frozenset()
    checks_fields: frozenset[str] = frozenset()
    # id of the rule this column was cloned from; augmented pools only
    parent: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "action", Action.parse(self.action))
        object.__setattr__(self, "updates_fields", frozenset(self.updates_fields))
        object.__setattr__(self, "checks_fields", frozenset(self.checks_fields))

    @property
    def is_updater(self) -> bool:
        return bool(self.updates_fields)

    @property
    def is_checker(self) -> bool:
        return bool(self.checks_fields)

    @property
    def group(self) -> str:
        """Id of the original rule this column stands for."""
        return self.parent if self.parent is not None else self.id


class ActionMap:
    """Total map from priority level to action.

    The per-action shuffle alphabet (all levels carrying that action) is
    derived from the entries and kept sorted.
    """

    def __init__(self, entries: Mapping[int, "Action | str"]):
        self._entries = {int(p): Action.parse(a) for p, a in entries.items()}
        for p in self._entries:
            if p < 0:
                raise ValueError(f"priority levels must be >= 0, got {p}")
        self._alphabet = {
            a: tuple(sorted(p for p, b in self._entries.items() if b == a)) for a in Action
        }
        top = max(self._entries, default=-1)
        # lut[p + 1] -> action code; slot 0 is the no-trigger default (accept)
        self.lut = np.zeros(top + 2, dtype=np.int8)
        for p, a in self._entries.items():
            self.lut[p + 1] = int(a)

    def __getitem__(self, priority: int) -> Action:
        return self._entries[int(priority)]

    def __contains__(self, priority: object) -> bool:
        return priority in self._entries

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ActionMap) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"ActionMap({ {p: str(a) for p, a in sorted(self._entries.items())} })"

    @property
    def entries(self) -> dict[int, Action]:
        return dict(self._entries)

    def alphabet(self, action: "Action | str") -> tuple[int, ...]:
        return self._alphabet[Action.parse(action)]

    def to_json(self) -> dict[str, str]:
        return {str(p): str(a) for p, a in sorted(self._entries.items())}


@dataclass(frozen=True)
class TriggerMatrix:
    """Rule firings per transaction plus the row-aligned side data.

    ``fields`` maps a blacklist-relevant field name to an object array of
    length ``n`` holding the value string, or ``None`` where the transaction
    does not carry that field.
    """

    fired: np.ndarray
    timestamps: np.ndarray
    labels: np.ndarray
    fields: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        fired = np.ascontiguousarray(np.asarray(self.fired, dtype=bool))
        if fired.ndim != 2:
            raise ValueError("fired must be a 2-d matrix")
        object.__setattr__(self, "fired", fired)
        object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype=np.int64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int8))
        object.__setattr__(
            self, "fields", {k: np.asarray(v, dtype=object) for k, v in dict(self.fields).items()}
        )
        for arr in (self.fired, self.timestamps, self.labels):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.fired.shape[0]

    @property
    def k(self) -> int:
        return self.fired.shape[1]

    def rows(self, start: int, stop: int) -> "TriggerMatrix":
        return TriggerMatrix(
            fired=self.fired[start:stop],
            timestamps=self.timestamps[start:stop],
            labels=self.labels[start:stop],
            fields={f: v[start:stop] for f, v in self.fields.items()},
        )

    def take_columns(self, columns: Sequence[int]) -> "TriggerMatrix":
        return TriggerMatrix(
            fired=self.fired[:, np.asarray(columns, dtype=np.intp)],
            timestamps=self.timestamps,
            labels=self.labels,
            fields=self.fields,
        )


@dataclass(frozen=True)
class Dataset:
    """A validated bundle: rules, action map and trigger data in column order."""

    rules: tuple[Rule, ...]
    amap: ActionMap
    triggers: TriggerMatrix

    @property
    def k(self) -> int:
        return len(self.rules)

    @property
    def n(self) -> int:
        return self.triggers.n

    @property
    def rule_ids(self) -> list[str]:
        return [r.id for r in self.rules]

    def original_priorities(self) -> np.ndarray:
        return np.array([r.original_priority for r in self.rules], dtype=np.int64)

    def rows(self, start: int, stop: int) -> "Dataset":
        return Dataset(self.rules, self.amap, self.triggers.rows(start, stop))

    def index_of(self) -> dict[str, int]:
        return {r.id: i for i, r in enumerate(self.rules)}

    def to_priority_map(self, p: np.ndarray) -> dict[str, int]:
        return {r.id: int(v) for r, v in zip(self.rules, p)}

    def from_priority_map(self, priorities: Mapping[str, int]) -> np.ndarray:
        """Vector over this pool from an id map; ids missing from the map are off."""
        return np.array([int(priorities.get(r.id, INACTIVE)) for r in self.rules], dtype=np.int64)


def validate_ruleset(
    rules: Sequence[Rule], amap: ActionMap, triggers: TriggerMatrix
) -> Dataset:
    """Check every model invariant and return the bundle, or raise with all violations."""
    problems: list[str] = []
    ids = [r.id for r in rules]
    seen: set[str] = set()
    for rid in ids:
        if rid in seen:
            problems.append(f"duplicate rule id {rid!r}")
        seen.add(rid)
    for r in rules:
        p = r.original_priority
        if p < 0:
            problems.append(f"rule {r.id!r}: original priority {p} must be >= 0")
        elif p not in amap:
            problems.append(f"rule {r.id!r}: unmapped priority {p}")
        elif amap[p] != r.action:
            problems.append(
                f"rule {r.id!r}: action/priority mismatch ({r.action} vs {amap[p]} at {p})"
            )
    if triggers.k != len(rules):
        problems.append(f"column-count mismatch: {triggers.k} trigger columns, {len(rules)} rules")
    n = triggers.n
    if triggers.timestamps.shape != (n,) or triggers.labels.shape != (n,):
        problems.append("timestamps/labels are not row-aligned with the trigger matrix")
    else:
        if n > 1 and np.any(np.diff(triggers.timestamps) < 0):
            problems.append("unsorted timestamps")
        if not np.isin(triggers.labels, (0, 1)).all():
            problems.append("non-binary label")
    for name, values in triggers.fields.items():
        if len(values) != n:
            problems.append(f"field {name!r} is not row-aligned")
    known = set(triggers.fields)
    for r in rules:
        for f in sorted((r.updates_fields | r.checks_fields) - known):
            problems.append(f"rule {r.id!r}: unknown field name {f!r}")
    if problems:
        raise ValidationError(problems)
    return Dataset(tuple(rules), amap, triggers)


def check_priority_vector(p: np.ndarray, rules: Sequence[Rule], amap: ActionMap) -> None:
    """Raise ``ValidationError`` unless ``p`` is a legal configuration for ``rules``."""
    problems = []
    p = np.asarray(p)
    if p.shape != (len(rules),):
        raise ValidationError([f"priority vector has shape {p.shape}, expected ({len(rules)},)"])
    for r, v in zip(rules, p.tolist()):
        if v < INACTIVE:
            problems.append(f"rule {r.id!r}: priority {v} below -1")
        elif v == INACTIVE:
            if r.mandatory:
                problems.append(f"rule {r.id!r}: mandatory-and-inactive conflict")
        elif v not in amap:
            problems.append(f"rule {r.id!r}: unmapped priority {v}")
        elif amap[v] != r.action:
            problems.append(f"rule {r.id!r}: action/priority mismatch at {v}")
        if r.frozen and v != r.original_priority:
            problems.append(f"rule {r.id!r}: frozen rule reprioritized to {v}")
    if problems:
        raise ValidationError(problems)


def mask(row_triggers: Iterable[bool], p: Sequence[int]) -> np.ndarray:
    """Priority-valued row: ``p_j`` where rule ``j`` fired and is active, else -1."""
    fired = np.asarray(row_triggers, dtype=bool)
    p = np.asarray(p, dtype=np.int64)
    if fired.shape != p.shape:
        raise ValueError("trigger row and priority vector lengths differ")
    return np.where(fired & (p > INACTIVE), p, INACTIVE)
