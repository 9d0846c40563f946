"""Temporal cross-validation with baselines and stability metrics."""
import json
import tempfile
from pathlib import Path

from ruleopt.pipeline import RunConfig
from ruleopt.synthetic import SyntheticConfig, generate
from ruleopt.tcv import run_tcv

data, _, _ = generate(seed=3, config=SyntheticConfig(n=40_000, n_fraud=2_000))
cfg = RunConfig.from_dict({
    "method": "greedy",
    "folds": {"period": 8_000},
    "stopping": {"max_evaluations": 600},
    "baselines": {"evaluations": 200, "rho_grid": [0.2, 0.4, 0.6]},
})
out = Path(tempfile.mkdtemp(prefix="tcv-"))
result = run_tcv(cfg, data, out, threads=2)
summary = json.loads((out / "summary.json").read_text())
print(f"{len(result['folds'])} folds written to {out}")
print("jaccard of removed sets:")
for row in summary["jaccard"]:
    print("  ", ["  -  " if v is None else f"{v:.3f}" for v in row])
print((out / "cross_fold.csv").read_text())
