"""CLUB-cascade: online clustering of users for linear cascading bandits.

The learner keeps per-user ridge statistics and a user graph. Each round it
pools the statistics of the current user's connected component, ranks the
pool by an upper confidence bound on the click probability, learns from the
examined prefix of the cascade, and deletes edges to users whose estimates
have drifted apart.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import alpha_default, beta_linear
from .environment import CascadeOutcome, top_k
from .graph import UserGraph
from .linalg import CholeskyFactor, cholesky, quad_form_inv, ridge_estimate

STATE_HEADER = "club-state v1"


class InconsistentOutcome(ValueError):
    pass


@dataclass
class ClubConfig:
    lam: float = 4.0
    alpha: float | None = None  # None: sqrt(32 d / lambda_x)
    beta: float | str = "auto"
    K: int = 4
    d: int = 20
    horizon: int = 10_000
    init: str = "complete"  # complete | erdos_renyi | empty
    edge_prob: float = 1.0
    init_seed: int = 0
    m_guess: int = 1
    lambda_x: float | None = None
    beta_mode: str = "fixed"  # fixed | anytime
    delta: float = 0.1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.K < 1 or self.d < 1 or self.horizon < 1:
            raise ValueError("K, d and horizon must be positive")
        if self.init not in ("complete", "erdos_renyi", "empty"):
            raise ValueError(f"unknown graph init {self.init!r}")
        if self.beta_mode not in ("fixed", "anytime"):
            raise ValueError(f"unknown beta mode {self.beta_mode!r}")
        if self.lam < self.K:
            warnings.warn(f"lam={self.lam} < K={self.K}: regret guarantee assumes lam >= K",
                          stacklevel=3)

    def resolved_alpha(self) -> float:
        if self.alpha is not None:
            return float(self.alpha)
        if self.lambda_x is None:
            raise ValueError("alpha not set and no lambda_x to derive the default from")
        return alpha_default(self.d, self.lambda_x)

    def resolved_beta(self) -> float:
        if self.beta == "auto":
            return auto_beta(self, self.m_guess, self.horizon)
        return float(self.beta)


def auto_beta(cfg: ClubConfig, m_guess: int = 1, T: int | None = None) -> float:
    """Fixed-horizon confidence width for ``m_guess`` clusters over ``T`` rounds."""
    T = cfg.horizon if T is None else T
    return beta_linear(T, 1.0 / (4 * m_guess * T), cfg.d, cfg.lam)


def deletion_threshold(T_i, T_l, alpha: float):
    """``alpha * (g(T_i) + g(T_l))`` with ``g(T) = sqrt((1 + ln(1 + T)) / (1 + T))``."""
    def g(T):
        T = np.asarray(T, dtype=float)
        return np.sqrt((1.0 + np.log1p(T)) / (1.0 + T))

    out = alpha * (g(T_i) + g(T_l))
    return float(out) if np.ndim(out) == 0 else out


def ucb_scores(theta_hat: np.ndarray, M, beta: float, X: np.ndarray) -> np.ndarray:
    """``min(theta_hat . x + beta * ||x||_{M^-1}, 1)`` for every row of ``X``.

    ``M`` may be passed already factored.
    """
    chol = M if isinstance(M, CholeskyFactor) else cholesky(M)
    X = np.atleast_2d(X)
    width = np.sqrt(np.maximum(quad_form_inv(chol, X), 0.0))
    return np.minimum(X @ theta_hat + beta * width, 1.0)


@dataclass
class Aggregate:
    members: np.ndarray
    M: np.ndarray
    b: np.ndarray
    theta_hat: np.ndarray
    T_V: int
    chol: CholeskyFactor


def init_graph(cfg: ClubConfig, u: int) -> UserGraph:
    if cfg.init == "complete":
        return UserGraph.complete(u)
    if cfg.init == "empty":
        return UserGraph.empty(u)
    return UserGraph.erdos_renyi(u, cfg.edge_prob, cfg.init_seed)


class ClubLearner:
    """Mutable learner state. One instance serves one simulation run."""

    def __init__(self, cfg: ClubConfig, u: int, graph: UserGraph | None = None,
                 prune: bool = True):
        if u < 1:
            raise ValueError("need at least one user")
        self.cfg = cfg
        self.u = u
        d = cfg.d
        self.S = np.zeros((u, d, d))
        self.b = np.zeros((u, d))
        self.T = np.zeros(u, dtype=np.int64)
        self.theta_hat = np.zeros((u, d))
        self.graph = init_graph(cfg, u) if graph is None else graph
        self.prune = prune
        self.alpha = cfg.resolved_alpha() if prune else math.inf
        self._beta = cfg.resolved_beta() if cfg.beta_mode == "fixed" else None

    @property
    def d(self) -> int:
        return self.cfg.d

    def component_aggregate(self, user: int) -> Aggregate:
        members = self.graph.component(user)
        if members.size == self.u:
            S_sum, b_sum = self.S.sum(axis=0), self.b.sum(axis=0)
        else:
            S_sum, b_sum = self.S[members].sum(axis=0), self.b[members].sum(axis=0)
        M = S_sum + self.cfg.lam * np.eye(self.d)
        chol = cholesky(M)
        theta = chol.solve(b_sum)
        return Aggregate(members, M, b_sum, theta, int(self.T[members].sum()), chol)

    def confidence_width(self, agg: Aggregate) -> float:
        if self._beta is not None:
            return self._beta
        return beta_linear(agg.T_V, self.cfg.delta, self.d, self.cfg.lam)

    def scores(self, agg: Aggregate, X: np.ndarray) -> np.ndarray:
        return ucb_scores(agg.theta_hat, agg.chol, self.confidence_width(agg), X)

    def recommend(self, user: int, X: np.ndarray, ids: np.ndarray | None = None) -> np.ndarray:
        """Pool positions of the ``K`` highest-scoring items, best first."""
        agg = self.component_aggregate(user)
        return top_k(self.scores(agg, X), self.cfg.K, ids)

    @staticmethod
    def examined(features: np.ndarray, outcome: CascadeOutcome) -> np.ndarray:
        """Rows of ``features`` the user looked at; checks the outcome fits the list."""
        features = np.atleast_2d(features)
        K_list = features.shape[0]
        n = outcome.n_examined
        if n > K_list or (not outcome.clicked and n != K_list):
            raise InconsistentOutcome(
                f"outcome examines {n} items of a list of length {K_list}")
        return features[:n]

    def update(self, user: int, features: np.ndarray, outcome: CascadeOutcome) -> None:
        seen = self.examined(features, outcome)
        n = seen.shape[0]
        self.S[user] += seen.T @ seen
        if outcome.clicked:
            self.b[user] += seen[-1]
        self.T[user] += n
        self.theta_hat[user] = self._user_estimate(user)

    def _user_estimate(self, user: int) -> np.ndarray:
        return ridge_estimate(self.S[user], self.b[user], self.cfg.lam)

    def prune_edges(self, user: int) -> int:
        """Delete edges from ``user`` to neighbours whose estimate is too far away."""
        if not self.prune or math.isinf(self.alpha):
            return 0
        nbrs = self.graph.neighbors(user)
        if nbrs.size == 0:
            return 0
        dist = np.linalg.norm(self.theta_hat[nbrs] - self.theta_hat[user], axis=1)
        thr = deletion_threshold(self.T[user], self.T[nbrs], self.alpha)
        return self.graph.remove_edges(user, nbrs[dist >= thr])

    def step(self, user: int, X: np.ndarray,
             feedback: Callable[[np.ndarray], CascadeOutcome],
             ids: np.ndarray | None = None):
        """One round: aggregate, score, recommend, observe, update, prune.

        ``feedback`` receives the recommended ids (pool positions when ``ids``
        is omitted) and returns the cascade outcome.
        """
        pos = self.recommend(user, X, ids)
        chosen = pos if ids is None else np.asarray(ids)[pos]
        outcome = feedback(chosen)
        self.update(user, X[pos], outcome)
        self.prune_edges(user)
        return chosen, outcome

    # -- snapshots -------------------------------------------------------

    def dump_state(self) -> str:
        return dump_state(self)


def init_learner(cfg: ClubConfig, u: int) -> ClubLearner:
    return ClubLearner(cfg, u)


def _fmt(values) -> str:
    return " ".join(f"{float(v):.17g}" for v in np.ravel(values))


def dump_state(learner: ClubLearner) -> str:
    """Text snapshot: header, scalars, per-user ``S`` lower triangle / ``b`` / ``T``, edges."""
    d = learner.d
    tril = np.tril_indices(d)
    lines = [STATE_HEADER, f"u {learner.u}", f"d {d}", f"lam {learner.cfg.lam:.17g}",
             f"alpha {learner.alpha:.17g}"]
    for i in range(learner.u):
        lines.append(f"user {i} T {int(learner.T[i])}")
        lines.append("S " + _fmt(learner.S[i][tril]))
        lines.append("b " + _fmt(learner.b[i]))
    edges = learner.graph.edges()
    lines.append(f"edges {len(edges)}")
    lines.extend(f"{i} {j}" for i, j in edges)
    return "\n".join(lines) + "\n"


def load_state(text: str, cfg: ClubConfig | None = None) -> ClubLearner:
    lines = text.splitlines()
    if not lines or lines[0].strip() != STATE_HEADER:
        raise ValueError(f"not a {STATE_HEADER!r} snapshot")
    it = iter(lines[1:])

    def field(name):
        key, value = next(it).split(maxsplit=1)
        if key != name:
            raise ValueError(f"expected {name!r}, found {key!r}")
        return value

    u, d = int(field("u")), int(field("d"))
    lam, alpha = float(field("lam")), float(field("alpha"))
    if cfg is None:
        cfg = ClubConfig(lam=lam, d=d, alpha=alpha, K=1)
    S = np.zeros((u, d, d))
    b = np.zeros((u, d))
    T = np.zeros(u, dtype=np.int64)
    tril = np.tril_indices(d)
    for i in range(u):
        head = next(it).split()
        if head[:2] != ["user", str(i)] or head[2] != "T":
            raise ValueError(f"bad user record {' '.join(head)!r}")
        T[i] = int(head[3])
        S[i][tril] = np.array(field("S").split(), dtype=float)
        S[i] = np.tril(S[i]) + np.tril(S[i], -1).T
        b[i] = np.array(field("b").split(), dtype=float)
    n_edges = int(field("edges"))
    adj = np.zeros((u, u), dtype=bool)
    for _ in range(n_edges):
        i, j = map(int, next(it).split())
        adj[i, j] = adj[j, i] = True
    learner = ClubLearner(cfg, u, graph=UserGraph(adj), prune=not math.isinf(alpha))
    learner.alpha = alpha
    learner.S, learner.b, learner.T = S, b, T
    for i in range(u):
        learner.theta_hat[i] = learner._user_estimate(i)
    return learner
