"""Fixed-partition comparators built from the clustering learner.

``single_cluster`` pools every user into one ridge model (the cascading
LinUCB setting); ``per_user`` keeps an independent model for each user.
Both are plain :class:`ClubLearner` instances with edge deletion turned off,
so they run through exactly the same round loop as the clustering learner.
"""

from __future__ import annotations

import enum

from .club import ClubConfig, ClubLearner
from .graph import UserGraph


class BaselineKind(enum.Enum):
    SINGLE_CLUSTER = "single_cluster"
    PER_USER = "per_user"


def make_baseline(kind: BaselineKind | str, cfg: ClubConfig, u: int) -> ClubLearner:
    kind = BaselineKind(kind)
    if kind is BaselineKind.SINGLE_CLUSTER:
        graph = UserGraph.complete(u)
    else:
        graph = UserGraph.empty(u)
    return ClubLearner(cfg, u, graph=graph, prune=False)
