"""Online clustering of users for contextual cascading bandits."""

from .baselines import BaselineKind, make_baseline
from .club import (
    ClubConfig,
    ClubLearner,
    InconsistentOutcome,
    auto_beta,
    deletion_threshold,
    dump_state,
    init_learner,
    load_state,
    ucb_scores,
)
from .environment import (
    NO_CLICK,
    CascadeOutcome,
    ClusterModel,
    ItemPool,
    cascade_feedback,
    expected_reward,
    gen_clusters,
    gen_item_pool,
    instant_regret,
    optimal_list,
)
from .glm import GlmClubLearner, glm_link_constants, glm_mle
from .graph import UserGraph

__version__ = "0.1.0"

__all__ = [
    "BaselineKind", "make_baseline", "ClubConfig", "ClubLearner", "InconsistentOutcome",
    "auto_beta", "deletion_threshold", "dump_state", "init_learner", "load_state", "ucb_scores",
    "NO_CLICK", "CascadeOutcome", "ClusterModel", "ItemPool", "cascade_feedback",
    "expected_reward", "gen_clusters", "gen_item_pool", "instant_regret", "optimal_list",
    "GlmClubLearner", "glm_link_constants", "glm_mle", "UserGraph",
]
