"""Loss functions over evaluation reports.

The three built-ins are written out directly (``loss_synthetic``, ``loss_d1``,
``loss_d2``). ``LossSpec`` is the configurable form: a weighted objective that
applies while all constraints hold, and a penalty made of a constant plus
baseline gaps otherwise. The built-ins have ``LossSpec`` encodings too, and
the two routes are tested against each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Mapping

if TYPE_CHECKING:
    from .evaluation import EvaluationReport

METRICS = ("rules", "recall", "alerts", "fpr")
_ALIASES = {
    "rules%": "rules",
    "rules_active_fraction": "rules",
    "alerts%": "alerts",
    "alert_rate": "alerts",
    "alert%": "alerts",
    "recall%": "recall",
    "fpr%": "fpr",
}


class ConfigError(ValueError):
    """Invalid loss, method or run configuration."""


class MissingBaselineError(ConfigError):
    pass


def canonical_metric(name: str) -> str:
    key = _ALIASES.get(str(name).strip().lower(), str(name).strip().lower())
    if key not in METRICS:
        raise ConfigError(f"unknown metric {name!r}; expected one of {METRICS}")
    return key


def _require(baseline):
    if baseline is None:
        raise MissingBaselineError("this loss compares against the original system; baseline missing")
    return baseline


def loss_synthetic(report, baseline=None, alpha=0.1, beta=0.5, gamma=0.4) -> float:
    return alpha * report.metric("rules") - beta * report.recall + gamma * report.alert_rate


def loss_d1(report, baseline, alpha=0.5, beta=0.5) -> float:
    base = _require(baseline)
    if report.recall >= 0.95 * base.recall:
        return alpha * report.metric("rules") + beta * report.alert_rate
    return alpha + beta + (base.recall - report.recall)


def loss_d2(report, baseline, alpha=0.05, beta=0.95) -> float:
    base = _require(baseline)
    if report.fpr <= base.fpr:
        return alpha * report.metric("rules") - beta * report.recall
    return alpha + (base.fpr - report.fpr)


@dataclass(frozen=True)
class Constraint:
    """``metric <op> scale * baseline[of] + constant``; ``of=None`` drops the baseline term."""

    metric: str
    op: str
    of: str | None = None
    scale: float = 1.0
    constant: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "metric", canonical_metric(self.metric))
        if self.of is not None:
            object.__setattr__(self, "of", canonical_metric(self.of))
        if self.op not in (">=", "<="):
            raise ConfigError(f"constraint comparator must be '>=' or '<=', got {self.op!r}")

    def holds(self, report, baseline) -> bool:
        bound = self.constant
        if self.of is not None:
            bound = self.scale * _require(baseline).metric(self.of) + self.constant
        value = report.metric(self.metric)
        return value >= bound if self.op == ">=" else value <= bound


@dataclass(frozen=True)
class LossSpec:
    """Weighted objective with optional constraints.

    Feasible: ``sum(w * metric)``. Infeasible:
    ``penalty_constant + sum(c * (baseline[m] - metric))`` over ``penalty_gaps``.
    """

    objective: tuple[tuple[str, float], ...] = ()
    constraints: tuple[Constraint, ...] = ()
    penalty_constant: float = 0.0
    penalty_gaps: tuple[tuple[str, float], ...] = ()
    name: str = "generic"
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        obj = tuple((canonical_metric(m), float(w)) for m, w in self.objective)
        gaps = tuple((canonical_metric(m), float(c)) for m, c in self.penalty_gaps)
        for _, w in obj + gaps:
            if not math.isfinite(w):
                raise ConfigError("loss weights must be finite")
        if not math.isfinite(self.penalty_constant):
            raise ConfigError("penalty constant must be finite")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "penalty_gaps", gaps)
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @property
    def needs_baseline(self) -> bool:
        return bool(self.penalty_gaps) or any(c.of is not None for c in self.constraints)

    def __call__(self, report, baseline=None) -> float:
        if self.needs_baseline:
            _require(baseline)
        if all(c.holds(report, baseline) for c in self.constraints):
            return float(sum(w * report.metric(m) for m, w in self.objective))
        return float(
            self.penalty_constant
            + sum(c * (baseline.metric(m) - report.metric(m)) for m, c in self.penalty_gaps)
        )

    def to_config(self) -> dict[str, Any]:
        if self.name in BUILTINS:
            return {"name": self.name, "params": dict(self.params)}
        return {
            "objective": [{"metric": m, "weight": w} for m, w in self.objective],
            "constraints": [
                {"metric": c.metric, "op": c.op, "of": c.of, "scale": c.scale,
                 "constant": c.constant}
                for c in self.constraints
            ],
            "penalty": {
                "constant": self.penalty_constant,
                "gaps": [{"metric": m, "coef": c} for m, c in self.penalty_gaps],
            },
        }

    @classmethod
    def from_config(cls, cfg: "str | Mapping[str, Any]") -> "LossSpec":
        if isinstance(cfg, str):
            cfg = {"name": cfg}
        if not isinstance(cfg, Mapping):
            raise ConfigError(f"loss must be a name or an object, got {type(cfg).__name__}")
        if "name" in cfg and cfg["name"] != "generic":
            try:
                factory = BUILTINS[cfg["name"]]
            except KeyError:
                raise ConfigError(f"unknown built-in loss {cfg['name']!r}") from None
            try:
                return factory(**(cfg.get("params") or {}))
            except TypeError as exc:
                raise ConfigError(f"bad parameters for loss {cfg['name']!r}: {exc}") from None
        unknown = set(cfg) - {"name", "objective", "constraints", "penalty"}
        if unknown:
            raise ConfigError(f"unknown loss keys: {sorted(unknown)}")
        try:
            penalty = cfg.get("penalty", {})
            return cls(
                objective=tuple((o["metric"], o["weight"]) for o in cfg.get("objective", [])),
                constraints=tuple(
                    Constraint(c["metric"], c["op"], c.get("of"), c.get("scale", 1.0),
                               c.get("constant", 0.0))
                    for c in cfg.get("constraints", [])
                ),
                penalty_constant=float(penalty.get("constant", 0.0)),
                penalty_gaps=tuple((g["metric"], g["coef"]) for g in penalty.get("gaps", [])),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed loss spec: {exc}") from exc


def synthetic_spec(alpha: float = 0.1, beta: float = 0.5, gamma: float = 0.4) -> LossSpec:
    return LossSpec(
        objective=(("rules", alpha), ("recall", -beta), ("alerts", gamma)), name="synthetic",
        params=(("alpha", alpha), ("beta", beta), ("gamma", gamma)),
    )


def d1_spec(alpha: float = 0.5, beta: float = 0.5) -> LossSpec:
    return LossSpec(
        objective=(("rules", alpha), ("alerts", beta)),
        constraints=(Constraint("recall", ">=", "recall", 0.95),),
        penalty_constant=alpha + beta,
        penalty_gaps=(("recall", 1.0),),
        name="d1",
        params=(("alpha", alpha), ("beta", beta)),
    )


def d2_spec(alpha: float = 0.05, beta: float = 0.95) -> LossSpec:
    return LossSpec(
        objective=(("rules", alpha), ("recall", -beta)),
        constraints=(Constraint("fpr", "<=", "fpr", 1.0),),
        penalty_constant=alpha,
        penalty_gaps=(("fpr", 1.0),),
        name="d2",
        params=(("alpha", alpha), ("beta", beta)),
    )


BUILTINS = {"synthetic": synthetic_spec, "d1": d1_spec, "d2": d2_spec}
