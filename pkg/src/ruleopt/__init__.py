"""Priority-based rule system evaluation and rule-set optimization."""
from .blacklist import BlacklistDependencyIndex, compute_blacklist_dependencies, handle_bd
from .core import INACTIVE, Action, ActionMap, Dataset, Rule, TriggerMatrix, ValidationError, \
    check_priority_vector, mask, validate_ruleset
from .evaluation import EvaluationReport, Evaluator, decide, evaluate, get_truth_value
from .losses import ConfigError, LossSpec, loss_d1, loss_d2, loss_synthetic
from .search import SearchProblem, SearchResult, StoppingCriteria, augment_dataset, \
    augment_rules_pool, optimize, random_priority_shuffle

__version__ = "0.1.0"

__all__ = [
    "INACTIVE",
    "Action",
    "ActionMap",
    "BlacklistDependencyIndex",
    "ConfigError",
    "Dataset",
    "EvaluationReport",
    "Evaluator",
    "LossSpec",
    "Rule",
    "SearchProblem",
    "SearchResult",
    "StoppingCriteria",
    "TriggerMatrix",
    "ValidationError",
    "augment_dataset",
    "augment_rules_pool",
    "check_priority_vector",
    "compute_blacklist_dependencies",
    "decide",
    "evaluate",
    "get_truth_value",
    "handle_bd",
    "loss_d1",
    "loss_d2",
    "loss_synthetic",
    "mask",
    "optimize",
    "random_priority_shuffle",
    "validate_ruleset",
]
