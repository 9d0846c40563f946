"""Blacklist dependency precomputation and per-row checker suppression.

A single forward pass over the time-sorted transactions replays the blacklist
as it evolved under the deployed configuration and records, per transaction,
which updater rule enabled each checker firing (``updater -> checker`` pairs).
Candidate configurations later reuse that index: a checker firing survives only
if at least one of its enabling rules is still active.

The index is exact whenever the candidate's active updaters are a subset of
the originally active ones, which is the only regime the optimizers produce.
"""
from __future__ import annotations

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import INACTIVE, Rule, TriggerMatrix, ValidationError

logger = logging.getLogger(__name__)

Key = tuple[int, str, str]  # (updater column, field name, field value)
Pair = tuple[int, int]  # (enabling rule column, checker column)


class BlacklistStore:
    """Half-open ``[start, end)`` intervals per (updater, field, value) key."""

    def __init__(self) -> None:
        self._intervals: dict[Key, list[list[float]]] = {}
        self._by_entity: dict[tuple[str, str], set[int]] = {}

    def open(self, key: Key, t: int) -> None:
        spans = self._intervals.setdefault(key, [])
        if spans and spans[-1][1] == math.inf:
            return  # already blacklisted; keep intervals disjoint
        spans.append([t, math.inf])
        self._by_entity.setdefault((key[1], key[2]), set()).add(key[0])

    def contains(self, key: Key, t: int) -> bool:
        spans = self._intervals.get(key)
        if not spans:
            return False
        i = bisect_right([s[0] for s in spans], t) - 1
        return i >= 0 and spans[i][0] <= t < spans[i][1]

    def close_last(self, key: Key, t: int) -> None:
        spans = self._intervals.get(key)
        if spans:
            spans[-1][1] = max(spans[-1][0], t)

    def updaters_for(self, field_name: str, value: str) -> set[int]:
        return self._by_entity.get((field_name, value), set())

    def intervals(self, key: Key) -> list[tuple[float, float]]:
        return [tuple(s) for s in self._intervals.get(key, [])]

    def keys(self) -> list[Key]:
        return list(self._intervals)


@dataclass
class BlacklistDependencyIndex:
    """Per-transaction sets of ``(enabler, checker)`` column pairs.

    Rows without any pair are absent from ``pairs``. ``issues`` collects
    non-fatal problems found while building (e.g. a checker fired on a row
    that does not carry the checked field).
    """

    n: int
    pairs: dict[int, frozenset[Pair]] = field(default_factory=dict)
    issues: list[str] = field(default_factory=list)
    store: BlacklistStore | None = None

    def __getitem__(self, row: int) -> frozenset[Pair]:
        return self.pairs.get(row, frozenset())

    def __len__(self) -> int:
        return self.n

    @property
    def empty(self) -> bool:
        return not self.pairs

    def rows(self, start: int, stop: int) -> "BlacklistDependencyIndex":
        """Restrict to rows ``[start, stop)``; the history before ``start`` stays baked in."""
        out = {x - start: ps for x, ps in self.pairs.items() if start <= x < stop}
        return BlacklistDependencyIndex(stop - start, out, [], None)

    def remap(self, column_map: Mapping[int, int]) -> "BlacklistDependencyIndex":
        """Rename rule columns (used when the pool is reordered or augmented)."""
        out = {
            x: frozenset((column_map[j], column_map[q]) for j, q in ps)
            for x, ps in self.pairs.items()
        }
        return BlacklistDependencyIndex(self.n, out, list(self.issues), self.store)


def compute_blacklist_dependencies(
    triggers: TriggerMatrix, rules: Sequence[Rule], original_p: Sequence[int]
) -> BlacklistDependencyIndex:
    """Build the dependency index from the deployed configuration ``original_p``.

    An updater contributes only where it fired *and* was active in the deployed
    system; a checker counts as fired from its recorded trigger alone. A firing
    checker with no responsible updater gets a self-pair, meaning the entry was
    blacklisted by someone outside the rule set (an analyst).
    """
    original_p = np.asarray(original_p, dtype=np.int64)
    updaters = [j for j, r in enumerate(rules) if r.is_updater]
    checkers = [q for q, r in enumerate(rules) if r.is_checker]
    bd = BlacklistDependencyIndex(triggers.n)
    if not updaters and not checkers:
        return bd

    unknown = [
        f"rule {rules[j].id!r}: unknown field name {f!r}"
        for j in updaters + checkers
        for f in sorted(rules[j].updates_fields | rules[j].checks_fields)
        if f not in triggers.fields
    ]
    if unknown:
        raise ValidationError(unknown)

    store = BlacklistStore()
    bd.store = store
    checkers_of: dict[str, list[int]] = {}
    for q in checkers:
        for f in sorted(rules[q].checks_fields):
            checkers_of.setdefault(f, []).append(q)
    no_active_checker = not any(original_p[q] > INACTIVE for q in checkers)
    watched = sorted({f for j in updaters for f in rules[j].updates_fields}
                     | {f for q in checkers for f in rules[q].checks_fields})
    upd_fields = {j: sorted(rules[j].updates_fields) for j in updaters}

    fired = triggers.fired
    times = triggers.timestamps.tolist()
    values = {f: triggers.fields[f] for f in watched}

    for x in range(triggers.n):
        t = times[x]
        row = fired[x]
        fired_checkers = {q for q in checkers if row[q]}
        found: set[Pair] = set()

        for j in updaters:
            really_fired = bool(row[j]) and original_p[j] > INACTIVE
            for f in upd_fields[j]:
                v = values[f][x]
                if v is None:
                    continue
                key = (j, f, v)
                if really_fired:
                    store.open(key, t)
                elif not store.contains(key, t):
                    continue
                # a past blacklisting by j counts as j firing here
                for q in checkers_of.get(f, ()):
                    if q in fired_checkers:
                        found.add((j, q))

        if no_active_checker:
            for f in watched:
                v = values[f][x]
                if v is None:
                    continue
                for j in sorted(store.updaters_for(f, v)):
                    key = (j, f, v)
                    if store.contains(key, t):
                        store.close_last(key, t)

        for q in sorted(fired_checkers):
            if any(values[f][x] is None for f in rules[q].checks_fields):
                bd.issues.append(
                    f"row {x}: checker {rules[q].id!r} fired without a value for "
                    f"{sorted(f for f in rules[q].checks_fields if values[f][x] is None)}"
                )
            if not any(c == q and rules[j].is_updater for j, c in found):
                found.add((q, q))

        if found:
            bd.pairs[x] = frozenset(found)

    if bd.issues:
        logger.warning("%d blacklist issues while building dependencies", len(bd.issues))
    return bd


def handle_bd(
    r1: Sequence[int],
    bd_x: Iterable[Pair],
    p: Sequence[int],
    checkers: Iterable[int] | None = None,
) -> np.ndarray:
    """Switch off checker entries none of whose enabling rules is active under ``p``.

    ``checkers`` defaults to the columns on the right-hand side of ``bd_x``.
    Entries that are already -1 are never switched on.
    """
    out = np.array(r1, dtype=np.int64, copy=True)
    p = np.asarray(p)
    bd_x = list(bd_x)
    enablers: dict[int, list[int]] = {}
    for j, q in bd_x:
        enablers.setdefault(q, []).append(j)
    cols = set(enablers) if checkers is None else set(checkers)
    for q in cols:
        if out[q] > INACTIVE and not any(p[j] > INACTIVE for j in enablers.get(q, ())):
            out[q] = INACTIVE
    return out
