from .mappo import (MappoConfig, baseline_variants, dfa_prefix_events,
                    evaluate_policy, mappo_train, normalize_advantages,
                    ppo_update, setup_subtask_world)
from .model import (ACTION_DIM, PolicyDims, PolicyModel, act, act_batch,
                    actor_features, aggregate_events, forward_team,
                    gaussian_log_prob, load_policy, new_policy, save_policy)

__all__ = [
    "MappoConfig", "baseline_variants", "dfa_prefix_events", "evaluate_policy",
    "mappo_train", "normalize_advantages", "ppo_update", "setup_subtask_world",
    "ACTION_DIM", "PolicyDims", "PolicyModel", "act", "act_batch",
    "actor_features", "aggregate_events", "forward_team", "gaussian_log_prob",
    "load_policy", "new_policy", "save_policy",
]
