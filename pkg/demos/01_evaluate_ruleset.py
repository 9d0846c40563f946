"""Score a deployed rule set and a hand-edited variant on synthetic traffic."""
import numpy as np

from ruleopt import Action, Evaluator, LossSpec
from ruleopt.synthetic import SyntheticConfig, generate

data, splits, _ = generate(seed=0, config=SyntheticConfig(n=30_000, n_fraud=1_500))
loss = LossSpec.from_config("synthetic")
ev = Evaluator(data)

deployed = data.original_priorities()
base = ev.report(deployed)
base = base.with_loss(loss(base, base))
print(f"{data.n} transactions, {data.k} rules")
print(f"deployed: loss {base.loss:+.4f} recall {base.recall:.3f} alerts {base.alert_rate:.4f}")

# switch off every accept rule and see what happens
variant = deployed.copy()
variant[[i for i, r in enumerate(data.rules) if r.action == Action.ACCEPT]] = -1
rep = ev.report(variant, loss, base)
print(f"no accepts: loss {rep.loss:+.4f} recall {rep.recall:.3f} alerts {rep.alert_rate:.4f}")
names = [a.name.lower() for a in Action]
print("first ten decisions:", [names[a] for a in ev.decisions(variant)[:10]])
