"""Run the three search strategies, with and without priority augmentation."""
import logging

from ruleopt import LossSpec, StoppingCriteria, compute_blacklist_dependencies
from ruleopt.pipeline import run_pipeline, score_rows
from ruleopt.synthetic import SyntheticConfig, generate

logging.basicConfig(level=logging.WARNING)

data, splits, _ = generate(seed=1, config=SyntheticConfig(n=30_000, n_fraud=1_500))
train, val = splits[0], splits[1]
loss = LossSpec.from_config("synthetic")
stop = StoppingCriteria(max_evaluations=2_000)
# dependencies over all rows, so validation sees blacklist history from training
bd = compute_blacklist_dependencies(data.triggers, data.rules, data.original_priorities())

settings = [
    ("random", {"rho": 0.4}, False),
    ("greedy", {}, False),
    ("genetic", {"psi": 30, "alpha": 0.05, "rho": 0.1}, False),
    ("greedy", {}, True),
    ("genetic", {"psi": 30, "alpha": 0.05, "rho": 0.1}, True),
]
for method, theta, arp in settings:
    res = run_pipeline(data.rows(*train), loss, method, theta, arp=arp, seed=0, stopping=stop,
                       threads=2)
    base, best = score_rows(data, res.pool, bd, val, res.result.p_best, loss)
    tag = method + (" + arp" if arp else "")
    print(f"{tag:<14} train {res.result.best.loss:+.4f}  validation {best.loss:+.4f} "
          f"(deployed {base.loss:+.4f})  removed {len(res.removed_rules())} rules")
