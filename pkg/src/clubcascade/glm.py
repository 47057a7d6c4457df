"""Generalized linear variant: click probability ``mu(theta . x)``.

Per-user and per-component estimates solve the likelihood equation
``sum (y - mu(theta . x)) x - reg * theta = 0`` by damped Newton iterations,
so raw examined samples are kept instead of sufficient statistics alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .bounds import alpha_default, beta_glm
from .club import Aggregate, ClubConfig, ClubLearner
from .environment import CascadeOutcome
from .graph import UserGraph
from .linalg import NoConvergence, cholesky, quad_form_inv

MAX_NEWTON_ITER = 100


@dataclass(frozen=True)
class Link:
    name: str
    mu: Callable[[np.ndarray], np.ndarray]
    dmu: Callable[[np.ndarray], np.ndarray]
    cumulant: Callable[[np.ndarray], np.ndarray]  # antiderivative of mu


def _logistic_dmu(z):
    p = expit(z)
    return p * (1.0 - p)


LOGISTIC = Link("logistic", expit, _logistic_dmu, lambda z: np.logaddexp(0.0, z))
IDENTITY = Link("identity", lambda z: np.asarray(z, dtype=float),
                lambda z: np.ones_like(np.asarray(z, dtype=float)), lambda z: 0.5 * np.square(z))
LINKS = {link.name: link for link in (LOGISTIC, IDENTITY)}


def glm_link_constants(link: Link | str = LOGISTIC) -> tuple[float, float]:
    """``(c_mu, kappa_mu)``: min slope on [-2, 2] and global Lipschitz constant."""
    link = LINKS[link] if isinstance(link, str) else link
    if link.name == "logistic":
        e2 = math.exp(2.0)
        return e2 / (1.0 + e2) ** 2, 0.25
    if link.name == "identity":
        return 1.0, 1.0
    raise ValueError(f"no closed-form constants for link {link.name!r}")


def glm_score(theta, X, y, link: Link = LOGISTIC, reg: float = 1e-6) -> np.ndarray:
    X = np.atleast_2d(X)
    return X.T @ (y - link.mu(X @ theta)) - reg * theta


def glm_jacobian(theta, X, y, link: Link = LOGISTIC, reg: float = 1e-6) -> np.ndarray:
    X = np.atleast_2d(X)
    w = link.dmu(X @ theta)
    return -(X.T * w) @ X - reg * np.eye(X.shape[1])


def glm_objective(theta, X, y, link: Link = LOGISTIC, reg: float = 1e-6) -> float:
    """Penalized log-likelihood whose gradient is :func:`glm_score`."""
    z = np.atleast_2d(X) @ theta
    return float(np.sum(y * z - link.cumulant(z)) - 0.5 * reg * theta @ theta)


def glm_mle(X: np.ndarray, y: np.ndarray, link: Link = LOGISTIC, reg: float = 1e-6,
            theta0: np.ndarray | None = None, tol: float = 1e-8, d: int | None = None) -> np.ndarray:
    """Newton's method with step halving on the penalized log-likelihood."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        if d is None and theta0 is None:
            raise ValueError("cannot infer the dimension without samples")
        return np.zeros(d if d is not None else len(theta0))
    X = np.atleast_2d(X)
    y = np.asarray(y, dtype=float)
    theta = np.zeros(X.shape[1]) if theta0 is None else np.array(theta0, dtype=float)

    obj = glm_objective(theta, X, y, link, reg)
    for _ in range(MAX_NEWTON_ITER):
        g = glm_score(theta, X, y, link, reg)
        if np.linalg.norm(g) <= tol:
            return theta
        step = cholesky(-glm_jacobian(theta, X, y, link, reg)).solve(g)
        scale = 1.0
        for _ in range(60):
            cand = theta + scale * step
            cand_obj = glm_objective(cand, X, y, link, reg)
            if cand_obj >= obj - 1e-12 * max(1.0, abs(obj)):
                break
            scale *= 0.5
        theta, obj = cand, cand_obj
    if np.linalg.norm(glm_score(theta, X, y, link, reg)) <= tol:
        return theta
    raise NoConvergence(f"Newton's method did not converge in {MAX_NEWTON_ITER} iterations")


class GlmClubLearner(ClubLearner):
    """CLUB-cascade with a link function; design matrix ``lam I + sum x x^T``."""

    def __init__(self, cfg: ClubConfig, u: int, link: Link = LOGISTIC, reg: float = 1e-6,
                 graph: UserGraph | None = None, prune: bool = True):
        self.link = link
        self.reg = reg
        self.c_mu, self.kappa_mu = glm_link_constants(link)
        self._X: list[list[np.ndarray]] = [[] for _ in range(u)]
        self._y: list[list[np.ndarray]] = [[] for _ in range(u)]
        super().__init__(cfg, u, graph=graph, prune=False)
        self.prune = prune
        if prune:
            self.alpha = (float(cfg.alpha) if cfg.alpha is not None
                          else alpha_default(cfg.d, self._lambda_x(), self.c_mu))
        self._beta = self._glm_beta(cfg.horizon) if cfg.beta_mode == "fixed" else None

    def _lambda_x(self) -> float:
        if self.cfg.lambda_x is None:
            raise ValueError("the GLM variant needs lambda_x for its default alpha/beta")
        return self.cfg.lambda_x

    def _glm_beta(self, T: float) -> float:
        if self.cfg.beta != "auto":
            return float(self.cfg.beta)
        delta = 1.0 / (4 * self.cfg.m_guess * self.cfg.horizon)
        return beta_glm(T, delta, self.d, self._lambda_x(), self.c_mu)

    def samples(self, users) -> tuple[np.ndarray, np.ndarray]:
        Xs = [x for i in np.atleast_1d(users) for x in self._X[i]]
        ys = [y for i in np.atleast_1d(users) for y in self._y[i]]
        if not Xs:
            return np.zeros((0, self.d)), np.zeros(0)
        return np.vstack(Xs), np.concatenate(ys)

    def _user_estimate(self, user: int) -> np.ndarray:
        X, y = self.samples(user)
        return glm_mle(X, y, self.link, self.reg, theta0=self.theta_hat[user], d=self.d)

    def component_aggregate(self, user: int) -> Aggregate:
        members = self.graph.component(user)
        M = self.S[members].sum(axis=0) + self.cfg.lam * np.eye(self.d)
        X, y = self.samples(members)
        theta = glm_mle(X, y, self.link, self.reg, theta0=self.theta_hat[user], d=self.d)
        return Aggregate(members, M, self.b[members].sum(axis=0), theta,
                         int(self.T[members].sum()), cholesky(M))

    def confidence_width(self, agg: Aggregate) -> float:
        if self._beta is not None:
            return self._beta
        return beta_glm(max(agg.T_V, 1), self.cfg.delta, self.d, self._lambda_x(), self.c_mu)

    def scores(self, agg: Aggregate, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        width = np.sqrt(np.maximum(quad_form_inv(agg.chol, X), 0.0))
        bonus = self.kappa_mu * self.confidence_width(agg) * width
        return np.minimum(self.link.mu(X @ agg.theta_hat) + bonus, 1.0)

    def update(self, user: int, features: np.ndarray, outcome: CascadeOutcome) -> None:
        seen = self.examined(features, outcome)
        self._X[user].append(seen.copy())
        self._y[user].append(np.asarray(outcome.observed, dtype=float))
        super().update(user, features, outcome)
