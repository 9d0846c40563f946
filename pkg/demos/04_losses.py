"""Compare the built-in losses and a custom weighted loss on one candidate."""
import numpy as np

from ruleopt import Evaluator, LossSpec
from ruleopt.synthetic import SyntheticConfig, generate

data, _, _ = generate(seed=2, config=SyntheticConfig(n=20_000, n_fraud=1_000))
ev = Evaluator(data)
base = ev.report(data.original_priorities())

rng = np.random.default_rng(0)
candidate = np.where(rng.random(data.k) < 0.3, -1, data.original_priorities())
rep = ev.report(candidate)

specs = {
    "synthetic": LossSpec.from_config("synthetic"),
    "d1": LossSpec.from_config("d1"),
    "d2 (alpha 0.1)": LossSpec.from_config({"name": "d2", "params": {"alpha": 0.1}}),
    # minimise alerts while keeping at least 90% of the deployed recall
    "custom": LossSpec.from_config({
        "objective": [{"metric": "alerts", "weight": 1.0}],
        "constraints": [{"metric": "recall", "op": ">=", "of": "recall", "scale": 0.9}],
        "penalty": {"constant": 1.0, "gaps": [{"metric": "recall", "coef": 10.0}]},
    }),
}
for name, spec in specs.items():
    print(f"{name:<16} {spec(rep, base):+.4f}   config {spec.to_config()}")
