"""Show how removing a blacklist updater changes later decisions."""
from ruleopt import Evaluator, Rule, compute_blacklist_dependencies
from ruleopt.core import ActionMap, Dataset, TriggerMatrix
import numpy as np

rules = [
    Rule("flag_email", "alert", 2, updates_fields={"email"}),
    Rule("listed_email", "decline", 3, checks_fields={"email"}),
    Rule("trusted", "accept", 1),
]
fired = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 1], [0, 1, 0], [0, 0, 1], [0, 1, 0]], dtype=bool)
triggers = TriggerMatrix(
    fired=fired,
    labels=np.array([1, 0, 1, 1, 0, 1]),
    timestamps=np.arange(1, 7),
    fields={"email": np.array(["e1", "e2", "e1", "e3", "e1", "e1"], dtype=object)},
)
data = Dataset(rules=tuple(rules), triggers=triggers,
               amap=ActionMap({1: "accept", 2: "alert", 3: "decline"}))

p = data.original_priorities()
bd = compute_blacklist_dependencies(data.triggers, data.rules, p)
for x in range(data.n):
    pairs = sorted((rules[u].id, rules[c].id) for u, c in bd[x])
    print(f"row {x}: dependencies {pairs}")

names = ("accept", "alert", "decline")
ev = Evaluator(data, bd)
print("deployed        :", [names[a] for a in ev.decisions(p)])
print("flag_email off  :", [names[a] for a in ev.decisions(np.array([-1, 3, 1]))])
