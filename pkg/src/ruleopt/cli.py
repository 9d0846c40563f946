"""Command-line entry point: ``ruleopt {evaluate,optimize,synth,tcv,report}``.

Exit codes: 0 success, 1 invalid data, 2 invalid configuration, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .blacklist import compute_blacklist_dependencies
from .core import ValidationError, check_priority_vector
from .evaluation import EvaluationReport, Evaluator
from .io import load_dataset, read_priorities, write_dataset, write_json
from .losses import ConfigError, LossSpec
from .pipeline import RunConfig, baseline_report, run
from .search import StoppingCriteria, augment_dataset
from .synthetic import SyntheticConfig, generate
from .tcv import align_priorities, run_tcv

logger = logging.getLogger("ruleopt")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
METRIC_COLUMNS = ("loss", "recall", "fpr", "alert_rate", "rules_active", "tp", "fp", "fn", "tn")


def _common(defaults: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags with suppressed defaults, so either
    # position works and the subcommand value wins
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(None), help="random seed (overrides config)")
    p.add_argument("--threads", type=int, default=d(1), help="evaluation worker threads")
    p.add_argument("--config", type=Path, default=d(None), help="run configuration JSON")
    p.add_argument("--out", type=Path, default=d(None), help="output directory")
    p.add_argument("--data", type=Path, default=d(None), help="dataset directory")
    p.add_argument("-v", "--verbose", action="count", default=d(0))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruleopt", parents=[_common(True)],
        description="Evaluate and optimize priority-based fraud rule systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(False)

    ev = sub.add_parser("evaluate", parents=[common], help="score one configuration")
    ev.add_argument("--priorities", type=Path,
                    help="JSON map rule id -> priority, or a report.json (default: deployed)")
    ev.add_argument("--loss", default=None, help="built-in loss name (default: from config)")
    ev.add_argument("--rows", type=int, nargs=2, metavar=("START", "STOP"))

    op = sub.add_parser("optimize", parents=[common], help="run one optimization")
    op.add_argument("--method", choices=("random", "greedy", "genetic"))
    op.add_argument("--evaluations", type=int, help="override stopping.max_evaluations")

    sy = sub.add_parser("synth", parents=[common], help="generate the synthetic dataset")
    sy.add_argument("--n", type=int, default=SyntheticConfig.n)
    sy.add_argument("--n-fraud", type=int, default=SyntheticConfig.n_fraud)

    sub.add_parser("tcv", parents=[common], help="temporal cross-validation with baselines")

    rp = sub.add_parser("report", parents=[common], help="print tables from a run directory")
    rp.add_argument("run_dir", type=Path)
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg.seed = args.seed
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


def _data_dir(args, cfg: RunConfig) -> Path:
    if args.data is not None:
        return args.data
    if cfg.data is not None:
        base = args.config.parent if args.config else Path(".")
        return base / cfg.data
    raise ConfigError("no dataset: pass --data or set 'data' in the configuration")


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def print_table(rows: Sequence[dict], columns: Sequence[str], out=None) -> None:
    out = out or sys.stdout
    cells = [[_fmt(r.get(c, "")) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    print("  ".join(c.ljust(w) for c, w in zip(columns, widths)), file=out)
    for row in cells:
        print("  ".join(v.rjust(w) for v, w in zip(row, widths)), file=out)


def _metrics(name: str, rep: "EvaluationReport | dict") -> dict:
    d = rep.to_dict() if isinstance(rep, EvaluationReport) else rep
    return {"system": name, **{c: d.get(c) for c in METRIC_COLUMNS}}


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    data = load_dataset(_data_dir(args, cfg))
    loss = LossSpec.from_config(args.loss) if args.loss else cfg.loss
    bd = compute_blacklist_dependencies(data.triggers, data.rules, data.original_priorities())
    pool = data
    if args.priorities:
        pmap = read_priorities(args.priorities)
        if not set(pmap) <= set(data.rule_ids):
            pool = augment_dataset(data)
        p, missing, extra = align_priorities(pool, pmap)
        if extra:
            raise ValidationError([f"unknown rule id {r!r} in priorities" for r in extra])
        if missing and pool is data:
            logger.warning("%d rules missing from priorities are treated as off", len(missing))
        check_priority_vector(p, pool.rules, pool.amap)
    else:
        p = data.original_priorities()
    if args.rows:
        a, b = args.rows
        data, pool, bd = data.rows(a, b), pool.rows(a, b), bd.rows(a, b)
    base = baseline_report(data, loss, bd)
    rep = Evaluator(pool, bd).report(p, loss, base)
    print_table([_metrics("deployed", base), _metrics("candidate", rep)],
                ("system",) + METRIC_COLUMNS)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        write_json({"loss": loss.to_config(), "baseline": base.to_dict(), "report": rep.to_dict(),
                    "p": pool.to_priority_map(p)}, args.out / "report.json")
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _config(args)
    if args.method:
        cfg.method = args.method
    if args.evaluations is not None:
        cfg.stopping = StoppingCriteria(max_evaluations=args.evaluations,
                                        max_seconds=cfg.stopping.max_seconds,
                                        epsilon=cfg.stopping.epsilon, window=cfg.stopping.window)
    data = load_dataset(_data_dir(args, cfg))
    report = run(cfg, data, args.out, threads=args.threads)
    rows = [_metrics("deployed", report["baseline"]), _metrics("optimized", report["best"])]
    if "validation" in report:
        rows += [_metrics("deployed (validation)", report["validation"]["baseline"]),
                 _metrics("optimized (validation)", report["validation"]["best"])]
    print_table(rows, ("system",) + METRIC_COLUMNS)
    print(f"removed {len(report['removed_rules'])} of {report['rules']} rules "
          f"after {report['evaluations']} evaluations")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.out is None:
        raise ConfigError("synth needs --out")
    seed = 0 if args.seed is None else args.seed
    data, splits, _ = generate(seed, SyntheticConfig(n=args.n, n_fraud=args.n_fraud))
    write_dataset(data, args.out)
    write_json({"seed": seed, "splits": {name: list(s) for name, s in
                                         zip(("train", "validation", "test"), splits)}},
               args.out / "splits.json")
    print(f"wrote {data.n} transactions x {data.k} rules to {args.out}")
    return EXIT_OK


def cmd_tcv(args) -> int:
    cfg = _config(args)
    data = load_dataset(_data_dir(args, cfg))
    result = run_tcv(cfg, data, args.out, threads=args.threads)
    _print_tcv(result)
    return EXIT_OK


def _print_tcv(result: dict) -> None:
    rows = []
    for fold in result["folds"]:
        for name, sc in fold["systems"].items():
            for split, rep in sc["reports"].items():
                rows.append({"fold": fold["fold"], "system": name, "split": split,
                             "loss": rep["loss"], "delta_loss": sc["delta_loss"][split],
                             "recall": rep["recall"], "alert_rate": rep["alert_rate"],
                             "rules_active": rep["rules_active"]})
    print_table(rows, ("fold", "system", "split", "loss", "delta_loss", "recall", "alert_rate",
                       "rules_active"))
    for key in ("jaccard", "ndcg", "cross_fold_test_loss"):
        if result.get(key) is None:
            continue
        print(f"\n{key}")
        m = result[key]
        labels = [str(i) for i in range(len(m))]
        print_table([{"fold": lab, **{c: ("" if v is None else v) for c, v in zip(labels, row)}}
                     for lab, row in zip(labels, m)], ["fold", *labels])


def cmd_report(args) -> int:
    d = args.run_dir
    if (d / "summary.json").exists():
        _print_tcv(json.loads((d / "summary.json").read_text(encoding="utf-8")))
        return EXIT_OK
    report = json.loads((d / "report.json").read_text(encoding="utf-8"))
    if "best" in report:
        rows = [_metrics("deployed", report["baseline"]), _metrics("optimized", report["best"])]
        if "validation" in report:
            rows += [_metrics("deployed (validation)", report["validation"]["baseline"]),
                     _metrics("optimized (validation)", report["validation"]["best"])]
    else:
        rows = [_metrics("deployed", report["baseline"]), _metrics("candidate", report["report"])]
    print_table(rows, ("system",) + METRIC_COLUMNS)
    if report.get("removed_rules") is not None:
        print("removed rules: " + (", ".join(report["removed_rules"]) or "none"))
    return EXIT_OK


COMMANDS = {
    "evaluate": cmd_evaluate,
    "optimize": cmd_optimize,
    "synth": cmd_synth,
    "tcv": cmd_tcv,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print("validation error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
