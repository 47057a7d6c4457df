"""Synthetic clustered users, item pools and cascade click feedback."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import min_eigenvalue


class InfeasibleMode(ValueError):
    pass


class DegeneratePool(ValueError):
    pass


class DuplicateItems(ValueError):
    pass


class PoolTooSmall(ValueError):
    pass


class NoClick(enum.Enum):
    """Click position when the user examined the whole list without clicking."""

    INFINITY = "inf"

    def __repr__(self) -> str:
        return "NO_CLICK"


NO_CLICK = NoClick.INFINITY


@dataclass(frozen=True)
class CascadeOutcome:
    """First click position (1-based) or ``NO_CLICK``, plus the examined prefix."""

    click_position: int | NoClick
    observed: tuple[int, ...]

    def __post_init__(self):
        obs = self.observed
        if self.click_position is NO_CLICK:
            if any(obs):
                raise ValueError("a no-click outcome cannot contain a click")
        else:
            c = self.click_position
            if c < 1 or len(obs) != c or obs[-1] != 1 or any(obs[:-1]):
                raise ValueError(f"observed prefix {obs} inconsistent with click at {c}")

    @classmethod
    def from_click(cls, position: int | NoClick, K: int) -> "CascadeOutcome":
        if position is NO_CLICK:
            return cls(NO_CLICK, (0,) * K)
        return cls(position, (0,) * (position - 1) + (1,))

    @property
    def clicked(self) -> bool:
        return self.click_position is not NO_CLICK

    @property
    def n_examined(self) -> int:
        return len(self.observed)


@dataclass(frozen=True)
class ItemFeature:
    id: int
    x: np.ndarray


@dataclass
class ItemPool:
    """Item features as rows of ``X``; row ``i`` is the item with id ``i``."""

    X: np.ndarray
    lambda_x_hat: float

    @property
    def size(self) -> int:
        return self.X.shape[0]

    @property
    def items(self) -> list[ItemFeature]:
        return [ItemFeature(i, x) for i, x in enumerate(self.X)]


@dataclass
class ClusterModel:
    theta: np.ndarray  # (m, d), unit rows
    assignment: np.ndarray  # (u,) cluster index per user
    gamma: float = field(default=float("nan"))

    @property
    def u(self) -> int:
        return self.assignment.shape[0]

    @property
    def m(self) -> int:
        return self.theta.shape[0]

    def user_theta(self, user: int) -> np.ndarray:
        return self.theta[self.assignment[user]]

    def partition(self) -> set[frozenset[int]]:
        return {frozenset(np.flatnonzero(self.assignment == j).tolist()) for j in range(self.m)}


def min_pairwise_distance(theta: np.ndarray) -> float:
    if theta.shape[0] < 2:
        return float("inf")
    return min(float(np.linalg.norm(a - b)) for a, b in itertools.combinations(theta, 2))


def _simplex_vertices(m: int) -> np.ndarray:
    """Unit vectors in R^m summing to zero, pairwise distance sqrt(2m/(m-1))."""
    V = np.eye(m) - 1.0 / m
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _gap_thetas(m: int, d: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    # base vector plus a scaled regular simplex living orthogonally to it
    span = np.linalg.qr(rng.standard_normal((d, m)))[0]  # d x m orthonormal
    base, dirs = span[:, 0], span[:, 1:]
    vertices = _simplex_vertices(m)  # rows in R^m, sum to zero -> rank m-1
    coords = np.linalg.qr(vertices.T)[0][:, : m - 1]  # basis of the simplex plane
    offsets = (vertices @ coords) @ dirs.T  # m x d, unit rows, orthogonal to base
    spread = np.sqrt(2.0 * m / (m - 1))
    if gamma >= spread - 1e-12:
        theta = offsets
    else:
        eps = gamma / np.sqrt(spread**2 - gamma**2)
        theta = base + eps * offsets
    return theta / np.linalg.norm(theta, axis=1, keepdims=True)


def gen_clusters(
    u: int,
    m: int,
    d: int,
    mode: str = "orthogonal",
    gamma: float | None = None,
    rng_seed: int | np.random.Generator = 0,
) -> ClusterModel:
    """Unit cluster vectors and a uniform user assignment with no empty cluster.

    ``mode="orthogonal"`` draws ``m`` random orthonormal vectors (gap
    ``sqrt(2)``). ``mode="gap"`` perturbs a random unit base vector along a
    regular simplex orthogonal to it, scaled so that all pairwise distances
    equal ``gamma``.
    """
    rng = np.random.default_rng(rng_seed)
    if not 1 <= m <= u:
        raise InfeasibleMode(f"need 1 <= m <= u, got m={m}, u={u}")
    if mode == "orthogonal":
        if m > d:
            raise InfeasibleMode(f"cannot place {m} orthogonal vectors in dimension {d}")
        theta = np.linalg.qr(rng.standard_normal((d, m)))[0].T
    elif mode == "gap":
        if gamma is None or not 0 < gamma <= 2:
            raise InfeasibleMode("gap mode needs 0 < gamma <= 2")
        if m == 1:
            g = rng.standard_normal(d)
            theta = (g / np.linalg.norm(g))[None, :]
        else:
            if m > d:
                raise InfeasibleMode(f"gap mode needs m <= d, got m={m}, d={d}")
            if gamma > np.sqrt(2.0 * m / (m - 1)) + 1e-12:
                raise InfeasibleMode(f"{m} unit vectors cannot be pairwise {gamma} apart")
            for _ in range(100):
                theta = _gap_thetas(m, d, gamma, rng)
                if min_pairwise_distance(theta) >= gamma - 1e-9:
                    break
            else:
                raise InfeasibleMode("rejection sampling for the gap construction failed")
    else:
        raise InfeasibleMode(f"unknown mode {mode!r}")

    assignment = rng.integers(m, size=u)
    assignment[rng.choice(u, size=m, replace=False)] = np.arange(m)
    return ClusterModel(theta=theta, assignment=assignment, gamma=min_pairwise_distance(theta))


def sample_items(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``x = (e_j + g/|g|) / 2`` with ``j`` uniform and ``g`` standard normal.

    Norm is at most 1 and the second moment is exactly ``I / (2d)``.
    """
    g = rng.standard_normal((n, d))
    X = 0.5 * g / np.linalg.norm(g, axis=1, keepdims=True)
    X[np.arange(n), rng.integers(d, size=n)] += 0.5
    return X


def second_moment_min_eig(d: int) -> float:
    return 1.0 / (2 * d)


def gen_item_pool(L: int, d: int, rng_seed: int | np.random.Generator = 0) -> ItemPool:
    if L < d:
        raise DegeneratePool(f"need L >= d, got L={L}, d={d}")
    rng = np.random.default_rng(rng_seed)
    X = sample_items(L, d, rng)
    lam = min_eigenvalue(X.T @ X / L)
    if lam <= 1e-6:
        raise DegeneratePool(f"empirical second moment is near singular ({lam:.3e})")
    return ItemPool(X=X, lambda_x_hat=lam)


def click_probability(theta: np.ndarray, x: np.ndarray) -> np.ndarray | float:
    """``clip(theta . x, 0, 1)``; ``x`` may be a single item or rows of items."""
    p = np.clip(np.asarray(x) @ np.asarray(theta), 0.0, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def _check_distinct(ids: Sequence[int] | None):
    if ids is not None and len(set(int(i) for i in ids)) != len(ids):
        raise DuplicateItems(f"recommended list has repeated ids: {list(ids)}")


def sample_cascade(probs: np.ndarray, rng: np.random.Generator) -> CascadeOutcome:
    """Walk down the list clicking item ``k`` with probability ``probs[k]``.

    Exactly ``len(probs)`` uniforms are consumed regardless of the outcome so
    that paired runs sharing a generator stay aligned.
    """
    draws = rng.random(len(probs))
    hits = np.flatnonzero(draws < probs)
    if hits.size == 0:
        return CascadeOutcome.from_click(NO_CLICK, len(probs))
    return CascadeOutcome.from_click(int(hits[0]) + 1, len(probs))


def cascade_feedback(
    features: np.ndarray,
    theta: np.ndarray,
    rng: np.random.Generator,
    ids: Sequence[int] | None = None,
) -> CascadeOutcome:
    features = np.atleast_2d(features)
    if features.shape[0] < 1:
        raise ValueError("empty list")
    _check_distinct(ids)
    return sample_cascade(click_probability(theta, features), rng)


def reward_from_probs(probs: np.ndarray) -> float:
    return 1.0 - float(np.prod(1.0 - np.asarray(probs, dtype=float)))


def expected_reward(features: np.ndarray, theta: np.ndarray) -> float:
    features = np.atleast_2d(features)
    if features.shape[0] < 1:
        raise ValueError("empty list")
    return reward_from_probs(click_probability(theta, features))


def top_k(scores: np.ndarray, K: int, ids: np.ndarray | None = None) -> np.ndarray:
    """Positions of the ``K`` largest scores, descending, ties to the smaller id."""
    scores = np.asarray(scores)
    n = scores.shape[0]
    if K > n:
        raise PoolTooSmall(f"need at least {K} items, pool has {n}")
    if ids is None:
        ids = np.arange(n)
    if K < n:
        kth = np.partition(scores, n - K)[n - K]
        cand = np.flatnonzero(scores >= kth)
    else:
        cand = np.arange(n)
    order = np.lexsort((ids[cand], -scores[cand]))
    return cand[order[:K]]


def optimal_list(X: np.ndarray, theta: np.ndarray, K: int) -> np.ndarray:
    """Ids of the ``K`` items with the largest ``theta . x``.

    The expected reward is symmetric and nondecreasing in every click
    probability, so this set maximizes it over all ordered ``K``-lists.
    """
    return top_k(X @ theta, K)


def instant_regret(chosen: Sequence[int], X: np.ndarray, theta: np.ndarray) -> float:
    K = len(chosen)
    best = expected_reward(X[optimal_list(X, theta, K)], theta)
    # reordering the same probabilities can leave ~1e-17 of float noise
    return max(best - expected_reward(X[np.asarray(chosen)], theta), 0.0)


def telescoped_gap(p_opt: np.ndarray, p_alg: np.ndarray) -> float:
    """Sum over positions of prefix(alg) * (p_opt - p_alg) * suffix(opt)."""
    p_opt = np.asarray(p_opt, dtype=float)
    p_alg = np.asarray(p_alg, dtype=float)
    K = p_opt.shape[0]
    total = 0.0
    for k in range(K):
        prefix = np.prod(1.0 - p_alg[:k])
        suffix = np.prod(1.0 - p_opt[k + 1 :])
        total += prefix * (p_opt[k] - p_alg[k]) * suffix
    return float(total)


def regret_decomposition_check(
    list_opt: np.ndarray, list_alg: np.ndarray, theta: np.ndarray
) -> float:
    """Discrepancy between the direct reward gap and its telescoped form."""
    p_opt = click_probability(theta, np.atleast_2d(list_opt))
    p_alg = click_probability(theta, np.atleast_2d(list_alg))
    return decomposition_discrepancy(p_opt, p_alg)


def decomposition_discrepancy(p_opt: np.ndarray, p_alg: np.ndarray) -> float:
    p_opt = np.asarray(p_opt, dtype=float)
    p_alg = np.asarray(p_alg, dtype=float)
    if p_opt.shape != p_alg.shape:
        raise ValueError("lists must have the same length")
    direct = np.prod(1.0 - p_alg) - np.prod(1.0 - p_opt)
    return abs(float(direct) - telescoped_gap(p_opt, p_alg))
