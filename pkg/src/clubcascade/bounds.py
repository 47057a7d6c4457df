"""Closed-form confidence widths, thresholds and regret bounds.

All logarithms are natural. Functions are pure and cheap; the empirical
checks that exercise them live in :mod:`clubcascade.bounds_check`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass


class DeltaTooLarge(ValueError):
    pass


class HypothesisViolated(ValueError):
    pass


@dataclass(frozen=True)
class BoundsConfig:
    d: int = 20
    lam: float = 4.0
    delta: float = 0.1
    gamma: float = math.sqrt(2.0)
    lambda_x: float = 0.025
    K: int = 4
    L_norm: float = 1.0
    u: int = 40
    m: int = 5
    T: int = 20_000
    c_mu: float = 1.0
    kappa_mu: float = 1.0

    def __post_init__(self):
        for name in ("d", "lam", "delta", "gamma", "lambda_x", "K", "L_norm", "u", "m", "T",
                     "c_mu", "kappa_mu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.delta >= 1:
            raise ValueError("delta must be < 1")
        if self.gamma > 2:
            raise ValueError("gamma must be <= 2")
        if self.lambda_x > 1:
            raise ValueError("lambda_x must be <= 1")


def beta_linear(t: float, delta: float, d: int, lam: float) -> float:
    """Ridge confidence radius ``sqrt(d ln(1 + t/(lam d)) + 2 ln(1/delta)) + sqrt(lam)``."""
    return math.sqrt(d * math.log1p(t / (lam * d)) + 2 * math.log(1 / delta)) + math.sqrt(lam)


def beta_glm(T: float, delta: float, d: int, lambda_x: float, c_mu: float) -> float:
    # ln(T/d) is clamped at zero below T = d, where the bound says nothing anyway
    log_term = max(math.log(T / d), 0.0) if T > 0 else 0.0
    return math.sqrt(8 / lambda_x + d * log_term + 2 * math.log(1 / delta)) / c_mu


def alpha_default(d: int, lambda_x: float, c_mu: float | None = None) -> float:
    """Edge-deletion scale: ``sqrt(32 d / lambda_x)``, divided by ``c_mu`` for GLMs."""
    a = math.sqrt(32 * d / lambda_x)
    return a if c_mu is None else a / c_mu


def det_upper_bound(trace_M0: float, sum_sq_norms: float, d: int) -> float:
    """AM-GM bound on ``det(M0 + sum x x^T)``."""
    return ((trace_M0 + sum_sq_norms) / d) ** d


def det_upper_bound_ridge(lam: float, n: int, L: float, d: int) -> float:
    return (lam + n * L**2 / d) ** d


def self_norm_sum_bound(n: int, K: int, d: int, lam: float, L: float = 1.0) -> float:
    if lam < K * L**2:
        warnings.warn(f"lam={lam} < K L^2={K * L**2}; the bound may not hold", stacklevel=2)
    return math.sqrt(2 * d * n * K * math.log1p(n * K * L**2 / (lam * d)))


def lambda_min_log_term(t: float, L: float, delta: float, d: int) -> float:
    tl = t * L**4
    return math.log((tl + 1) * (tl + 3) * d / delta)


def lambda_min_lower(t: float, lambda_x: float, L: float, delta: float, d: int) -> float:
    """Anytime lower bound on ``lambda_min`` of a sum of ``t`` i.i.d. outer products."""
    A = lambda_min_log_term(t, L, delta, d)
    value = t * lambda_x - (L**2 / 3) * math.sqrt(18 * t * A + A**2) - (L**2 / 3) * A
    return max(value, 0.0)


def lambda_min_threshold(lambda_x: float, d: int, delta: float) -> float:
    """Sample size beyond which ``lambda_min(S_t) >= t lambda_x / 2`` (unit-norm items)."""
    if delta > 1 / 8:
        raise DeltaTooLarge(f"delta={delta} exceeds 1/8")
    return 256 / lambda_x**2 * math.log(128 * d / (lambda_x**2 * delta))


def lambda_min_threshold_eighth(lambda_x: float, d: int, delta: float) -> float:
    """Per-user threshold used for the ``lambda_min >= T lambda_x / 8`` event."""
    return 1024 / lambda_x**2 * math.log(512 * d / (lambda_x**2 * delta))


def bernstein_rounds(p: float, B: float, n: float, delta: float) -> float:
    """Rounds after which a Bernoulli(p) running sum exceeds ``B`` (union over ``n``)."""
    if not 0 < p <= 0.5:
        raise ValueError("need 0 < p <= 1/2")
    if not B > 0:
        raise ValueError("need B > 0")
    return 16 / p * math.log(n / delta) + 4 * B / p


def log_dominance_threshold(a: float, b: float) -> float:
    """``2 a ln(ab)``: any ``t`` at least this large satisfies ``t >= a ln(b t)``."""
    if not (a > 0 and b > 0):
        raise ValueError("need a, b > 0")
    if a * b < math.e * (1 - 1e-15):
        raise HypothesisViolated(f"ab={a * b} < e")
    return 2 * a * math.log(a * b)


def t0_exploration(u: int, d: int, gamma: float, lambda_x: float, delta: float, T: float) -> float:
    """Rounds after which every user has enough feedback for correct clustering."""
    per_user = max(
        512 * d / (gamma**2 * lambda_x) * math.log(4 * u / delta),
        256 / lambda_x**2 * math.log(128 * d / (lambda_x**2 * delta)),
    )
    return 16 * u * math.log(4 * u * T / delta) + 4 * u * per_user


def gamma_confidence_threshold(d: int, gamma: float, lambda_x: float, u: int, delta: float) -> float:
    return 512 * d / (gamma**2 * lambda_x) * math.log(4 * u / delta)


def gamma_quotient(T: float, d: int, lam: float, lambda_x: float, u: int, delta: float) -> float:
    """l2 confidence radius of a user estimate after ``T`` feedbacks; compare with ``gamma/2``."""
    num = math.sqrt(d * math.log1p(T / (lam * d)) + 2 * math.log(4 * u / delta)) + math.sqrt(lam)
    return num / math.sqrt(lam + T * lambda_x / 8)


def regret_main_term(d: int, lam: float, m: int, K: int, T: float) -> float:
    width = math.sqrt(d * math.log1p(T / (lam * d)) + 2 * math.log(4 * m * T)) + math.sqrt(lam)
    return 2 * width * math.sqrt(2 * d * m * K * T * math.log1p(T * K / (lam * d)))


def regret_upper_bound(cfg: BoundsConfig) -> float:
    """Main ellipsoid term plus the clustering exploration rounds.

    With a single cluster the initial complete graph is already correct, so
    no exploration term is added.
    """
    main = regret_main_term(cfg.d, cfg.lam, cfg.m, cfg.K, cfg.T)
    if cfg.m == 1:
        return main
    return main + t0_exploration(cfg.u, cfg.d, cfg.gamma, cfg.lambda_x, cfg.delta, cfg.T)
