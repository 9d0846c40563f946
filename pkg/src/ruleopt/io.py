"""Dataset files, priority maps and the binary trigger cache.

A dataset directory holds ``rules.csv``, ``triggers.csv``, ``actionmap.json``
and optionally ``fields.csv``. Column order in ``rules.csv`` is the canonical
rule order everywhere; writing a loaded dataset back reproduces the same
bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from .core import Action, ActionMap, Dataset, Rule, TriggerMatrix, ValidationError, \
    validate_ruleset

logger = logging.getLogger(__name__)

RULES_HEADER = ["id", "action", "priority", "mandatory", "frozen", "updates_fields",
                "checks_fields"]
CACHE_DIR = ".ruleopt-cache"
_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f", ""}


def _flag(value: str, where: str, problems: list[str]) -> bool:
    v = str(value).strip().lower()
    if v in _TRUE:
        return True
    if v not in _FALSE:
        problems.append(f"{where}: expected a boolean, got {value!r}")
    return False


def _split_fields(value: str) -> frozenset[str]:
    return frozenset(f.strip() for f in str(value or "").split(";") if f.strip())


def read_rules(path: Path) -> list[Rule]:
    problems: list[str] = []
    rules = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in RULES_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise ValidationError([f"rules.csv: missing columns {missing}"])
        for lineno, row in enumerate(reader, start=2):
            where = f"rules.csv line {lineno}"
            try:
                action = Action.parse(row["action"])
            except ValueError as exc:
                problems.append(f"{where}: {exc}")
                continue
            try:
                priority = int(row["priority"])
            except ValueError:
                problems.append(f"{where}: priority {row['priority']!r} is not an integer")
                continue
            rules.append(Rule(
                id=row["id"].strip(),
                action=action,
                original_priority=priority,
                mandatory=_flag(row["mandatory"], where, problems),
                frozen=_flag(row["frozen"], where, problems),
                updates_fields=_split_fields(row["updates_fields"]),
                checks_fields=_split_fields(row["checks_fields"]),
            ))
    if problems:
        raise ValidationError(problems)
    return rules


def read_actionmap(path: Path) -> ActionMap:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        return ActionMap({int(p): a for p, a in raw.items()})
    except (ValueError, AttributeError) as exc:
        raise ValidationError([f"actionmap.json: {exc}"]) from exc


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_triggers(path: Path, rule_ids: list[str]):
    problems: list[str] = []
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    header = list(frame.columns)
    if header[:2] != ["timestamp_ms", "label"]:
        raise ValidationError([f"triggers.csv: header must start with timestamp_ms,label, "
                               f"got {header[:2]}"])
    cols = header[2:]
    missing = [r for r in rule_ids if r not in cols]
    extra = [c for c in cols if c not in set(rule_ids)]
    for r in missing:
        problems.append(f"triggers.csv: no column for declared rule {r!r}")
    for c in extra:
        problems.append(f"triggers.csv: column {c!r} is not a declared rule")
    if cols != rule_ids and not missing and not extra:
        problems.append("triggers.csv: rule columns are not in rules.csv order")

    ts = pd.to_numeric(frame["timestamp_ms"], errors="coerce")
    bad_ts = np.flatnonzero(ts.isna().to_numpy())
    if bad_ts.size:
        problems.append(f"triggers.csv: unparseable timestamp on data rows "
                        f"{(bad_ts[:10] + 1).tolist()}")
    labels = frame["label"].str.strip()
    bad_lab = np.flatnonzero(~labels.isin(["0", "1"]).to_numpy())
    if bad_lab.size:
        problems.append(f"triggers.csv: non-binary label on data rows "
                        f"{(bad_lab[:10] + 1).tolist()}")
    fired = np.zeros((len(frame), len(rule_ids)), dtype=bool)
    for j, rid in enumerate(rule_ids):
        if rid not in frame:
            continue
        col = frame[rid].str.strip()
        ok = col.isin(["0", "1"]).to_numpy()
        if not ok.all():
            problems.append(f"triggers.csv: non-binary trigger cell in column {rid!r} "
                            f"(data rows {(np.flatnonzero(~ok)[:10] + 1).tolist()})")
        fired[:, j] = (col == "1").to_numpy()
    if problems:
        raise ValidationError(problems)
    return ts.to_numpy(dtype=np.int64), labels.astype(np.int8).to_numpy(), fired


def read_triggers(path: Path, rule_ids: list[str], cache: bool = True):
    """Return ``(timestamps, labels, fired)``, memory-mapped from the cache when possible."""
    path = Path(path)
    slot = None
    if cache:
        key = hashlib.sha256(("\x1f".join(rule_ids) + _digest(path)).encode()).hexdigest()[:24]
        slot = path.parent / CACHE_DIR / key
        if (slot / "fired.npy").exists():
            try:
                return (np.load(slot / "timestamps.npy"), np.load(slot / "labels.npy"),
                        np.load(slot / "fired.npy", mmap_mode="r"))
            except (OSError, ValueError):
                logger.warning("ignoring unreadable trigger cache %s", slot)
    ts, labels, fired = _parse_triggers(path, rule_ids)
    if slot is not None:
        try:
            slot.mkdir(parents=True, exist_ok=True)
            np.save(slot / "timestamps.npy", ts)
            np.save(slot / "labels.npy", labels)
            np.save(slot / "fired.npy", fired)
        except OSError:
            logger.info("trigger cache not written to %s", slot)
    return ts, labels, fired


def read_fields(path: Path, timestamps: np.ndarray) -> tuple[dict[str, np.ndarray], list[str]]:
    n = len(timestamps)
    values: dict[str, np.ndarray] = {}
    problems: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0] and rows[0][0] == "timestamp_ms":
        rows = rows[1:]
    if len(rows) != n:
        return {}, [f"fields.csv: {len(rows)} rows, triggers.csv has {n}"]
    for x, row in enumerate(rows):
        if not row:
            problems.append(f"fields.csv row {x + 1}: empty")
            continue
        try:
            t = int(row[0])
        except ValueError:
            problems.append(f"fields.csv row {x + 1}: unparseable timestamp {row[0]!r}")
            continue
        if t != timestamps[x]:
            problems.append(f"fields.csv row {x + 1}: timestamp {t} != {timestamps[x]}")
        for cell in row[1:]:
            name, sep, value = cell.partition("=")
            if not sep:
                problems.append(f"fields.csv row {x + 1}: expected field=value, got {cell!r}")
                continue
            values.setdefault(name, np.full(n, None, dtype=object))[x] = value
    return values, problems


def load_dataset(directory: "str | Path", cache: bool = True) -> Dataset:
    """Load and validate a dataset directory; every violation is reported at once."""
    d = Path(directory)
    rules = read_rules(d / "rules.csv")
    amap = read_actionmap(d / "actionmap.json")
    ids = [r.id for r in rules]
    ts, labels, fired = read_triggers(d / "triggers.csv", ids, cache=cache)
    problems: list[str] = []
    fields: dict[str, np.ndarray] = {}
    if (d / "fields.csv").exists():
        fields, problems = read_fields(d / "fields.csv", ts)
    try:
        data = validate_ruleset(rules, amap, TriggerMatrix(fired, ts, labels, fields))
    except ValidationError as exc:
        raise ValidationError(problems + exc.violations) from None
    if problems:
        raise ValidationError(problems)
    return data


def _bool(v: bool) -> str:
    return "true" if v else "false"


def write_dataset(data: Dataset, directory: "str | Path") -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "rules.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RULES_HEADER)
        for r in data.rules:
            w.writerow([r.id, str(r.action), r.original_priority, _bool(r.mandatory),
                        _bool(r.frozen), ";".join(sorted(r.updates_fields)),
                        ";".join(sorted(r.checks_fields))])
    with open(d / "actionmap.json", "w", encoding="utf-8") as fh:
        json.dump(data.amap.to_json(), fh, indent=2)
        fh.write("\n")
    tm = data.triggers
    block = np.column_stack([tm.timestamps, tm.labels.astype(np.int64),
                             np.asarray(tm.fired, dtype=np.int64)])
    with open(d / "triggers.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["timestamp_ms", "label", *data.rule_ids]) + "\n")
        buf = io.StringIO()
        np.savetxt(buf, block, fmt="%d", delimiter=",")
        fh.write(buf.getvalue())
    if tm.fields:
        names = sorted(tm.fields)
        with open(d / "fields.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for x in range(tm.n):
                cells = [f"{f}={tm.fields[f][x]}" for f in names if tm.fields[f][x] is not None]
                w.writerow([int(tm.timestamps[x]), *cells])
    return d


def read_priorities(path: "str | Path") -> dict[str, int]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if "p_best" in raw and isinstance(raw["p_best"], Mapping):
        raw = raw["p_best"]
    return {str(k): int(v) for k, v in raw.items()}


def write_json(obj, path: "str | Path") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trace(trace: np.ndarray, path: "str | Path") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("eval_index,candidate_loss,best_loss\n")
        for i, cand, best in trace.tolist():
            fh.write(f"{int(i)},{cand!r},{best!r}\n")


def write_table(rows: Iterable[Mapping], path: "str | Path") -> None:
    rows = list(rows)
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
