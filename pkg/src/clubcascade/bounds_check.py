"""Monte-Carlo checks that the closed-form bounds hold on simulated data.

Every suite returns a :class:`CheckRow`. A trial is one random instance
(a feature sequence, a seed, a parameter draw). A row passes when the
number of violating trials stays within its budget: zero for deterministic
inequalities, ``delta * trials`` for high-probability events.

``invert=True`` flips every comparison. It exists as a negative control so
that tests can confirm a broken bound is actually reported as a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import bounds
from .environment import sample_items

# slack for comparing a float computation against a closed form
REL_TOL = 1e-9


@dataclass(frozen=True)
class CheckRow:
    name: str
    trials: int
    violations: int
    allowed: int
    worst_empirical: float
    bound_at_worst: float

    @property
    def passed(self) -> bool:
        return self.violations <= self.allowed

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass(frozen=True)
class BoundsCheckConfig:
    det_trials: int = 500
    self_norm_trials: int = 500
    lambda_min_trials: int = 200
    lambda_min_horizon: int = 10_000
    bernstein_trials: int = 1000
    log_dominance_trials: int = 1000
    gamma_trials: int = 1000
    ellipsoid_trials: int = 200
    ellipsoid_horizon: int = 5000
    delta: float = 0.1
    seed: int = 0

    @classmethod
    def zero(cls) -> "BoundsCheckConfig":
        return cls(**{f.name: 0 for f in fields(cls) if f.name.endswith("_trials")})


def _violated(empirical: float, bound: float, invert: bool) -> bool:
    """``empirical <= bound`` up to rounding, or the reverse when inverted."""
    slack = REL_TOL * max(1.0, abs(bound))
    if invert:
        return empirical < bound - slack
    return empirical > bound + slack


def _unit_ball(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((n, 1)) ** (1.0 / d)


def _row(name, trials, violations, allowed, worst):
    emp, bnd = worst if worst is not None else (math.nan, math.nan)
    return CheckRow(name, trials, violations, allowed, emp, bnd)


class _Worst:
    """Tracks the trial with the smallest ``bound - empirical`` margin."""

    def __init__(self):
        self.margin = math.inf
        self.pair = None

    def see(self, empirical: float, bound: float):
        if bound - empirical < self.margin:
            self.margin = bound - empirical
            self.pair = (float(empirical), float(bound))

    def see_lower(self, empirical: float, bound: float):
        """For checks where the empirical value should stay above the bound."""
        if empirical - bound < self.margin:
            self.margin = empirical - bound
            self.pair = (float(empirical), float(bound))


def check_det(trials: int, rng: np.random.Generator, invert: bool = False) -> CheckRow:
    bad, worst = 0, _Worst()
    for _ in range(trials):
        d = int(rng.integers(1, 6))
        n = int(rng.integers(0, 51))
        lam = float(rng.uniform(0.1, 3.0))
        X = _unit_ball(n, d, rng)
        M = lam * np.eye(d)
        logdets = [np.linalg.slogdet(M)[1]]
        for x in X:
            M = M + np.outer(x, x)
            logdets.append(np.linalg.slogdet(M)[1])
        # both sides in log space; det can reach ~1e10 at d=5
        emp = logdets[-1]
        bnd = math.log(bounds.det_upper_bound_ridge(lam, n, 1.0, d))
        monotone = all(b >= a - 1e-12 for a, b in zip(logdets, logdets[1:]))
        worst.see(emp, bnd)
        if _violated(emp, bnd, invert) or (not monotone and not invert):
            bad += 1
    return _row("det_upper_bound", trials, bad, 0, worst.pair)


def check_self_norm(trials: int, rng: np.random.Generator, invert: bool = False) -> CheckRow:
    bad, worst = 0, _Worst()
    for _ in range(trials):
        d = int(rng.integers(1, 6))
        K = int(rng.integers(1, 5))
        n = int(rng.integers(0, 51))
        lam = K * float(rng.uniform(1.0, 3.0))  # lam >= K L^2 with L = 1
        M = lam * np.eye(d)
        total = 0.0
        for _t in range(n):
            Kt = int(rng.integers(1, K + 1))
            X = _unit_ball(Kt, d, rng)
            total += float(np.sum(np.sqrt(np.einsum("ij,ij->i", X, np.linalg.solve(M, X.T).T))))
            M = M + X.T @ X
        bnd = bounds.self_norm_sum_bound(n, K, d, lam)
        worst.see(total, bnd)
        bad += _violated(total, bnd, invert)
    return _row("self_norm_sum_bound", trials, bad, 0, worst.pair)


def check_lambda_min(trials: int, rng: np.random.Generator, horizon: int = 10_000,
                     delta: float = 0.1, d: int = 5, invert: bool = False) -> CheckRow:
    """Anytime lower bound on ``lambda_min`` of a sum of i.i.d. outer products."""
    lambda_x = 1.0 / (2 * d)  # exact for the item sampler
    t = np.arange(1, horizon + 1)
    A = np.log((t + 1.0) * (t + 3.0) * d / delta)
    lower = np.maximum(t * lambda_x - np.sqrt(18 * t * A + A**2) / 3 - A / 3, 0.0)
    bad, worst = 0, _Worst()
    for _ in range(trials):
        X = sample_items(horizon, d, rng)
        S = np.cumsum(X[:, :, None] * X[:, None, :], axis=0)
        eig = np.linalg.eigvalsh(S)[:, 0]
        gap = eig - lower
        k = int(np.argmin(gap))
        worst.see_lower(eig[k], lower[k])
        slack = REL_TOL * np.maximum(1.0, lower)
        bad += bool(np.any(gap > slack)) if invert else bool(np.any(gap < -slack))
    return _row("lambda_min_lower", trials, bad, int(math.floor(delta * trials)), worst.pair)


def check_bernstein(trials: int, rng: np.random.Generator, p: float = 0.1, B: float = 5.0,
                    n: float = 1e4, delta: float = 0.05, invert: bool = False) -> CheckRow:
    t = int(math.ceil(bounds.bernstein_rounds(p, B, n, delta)))
    sums = rng.binomial(t, p, size=trials) if trials else np.zeros(0)
    failed = sums < B
    if invert:
        failed = ~failed
    worst = (float(sums.min()), B) if trials else None
    return _row("bernstein_rounds", trials, int(failed.sum()), int(math.floor(0.05 * trials)),
                worst)


def check_log_dominance(trials: int, rng: np.random.Generator, invert: bool = False) -> CheckRow:
    bad, worst = 0, _Worst()
    for _ in range(trials):
        a = float(np.exp(rng.uniform(-3.0, 8.0)))
        b = float(np.exp(rng.uniform(0.0, 8.0))) * math.e / a  # ab >= e
        t0 = bounds.log_dominance_threshold(a, b)
        for t in (t0, 10 * t0):
            rhs = a * math.log(b * t)
            worst.see(rhs, t)
            bad += _violated(rhs, t, invert)
    return _row("log_dominance_threshold", trials, bad, 0, worst.pair)


def gamma_side_conditions(T, d, gamma, lambda_x, u, delta, lam) -> bool:
    """Assumptions under which the gamma threshold implies the half-gap radius."""
    return (lam <= d * math.log1p(T / (lam * d)) + 2 * math.log(4 * u / delta)
            and delta <= u * gamma**2 * lambda_x * lam / 128)


def check_gamma_quotient(trials: int, rng: np.random.Generator, invert: bool = False) -> CheckRow:
    """Draws parameters until ``trials`` satisfy the side conditions."""
    bad, done, worst = 0, 0, _Worst()
    attempts = 0
    while done < trials and attempts < 100 * max(trials, 1):
        attempts += 1
        d = int(rng.integers(1, 31))
        gamma = float(rng.uniform(0.05, 2.0))
        lambda_x = float(np.exp(rng.uniform(math.log(1e-3), 0.0)))
        u = int(rng.integers(1, 201))
        delta = float(np.exp(rng.uniform(math.log(1e-4), math.log(0.5))))
        lam = float(rng.uniform(0.1, 10.0))
        T = bounds.gamma_confidence_threshold(d, gamma, lambda_x, u, delta)
        if not gamma_side_conditions(T, d, gamma, lambda_x, u, delta, lam):
            continue
        done += 1
        for scale in (1.0, 10.0):
            q = bounds.gamma_quotient(scale * T, d, lam, lambda_x, u, delta)
            worst.see(q, gamma / 2)
            bad += _violated(q, gamma / 2, invert)
    return _row("gamma_confidence_threshold", done, bad, 0, worst.pair)


def ellipsoid_violation(rng: np.random.Generator, horizon: int, d: int = 5, lam: float = 1.0,
                        delta: float = 0.1) -> tuple[bool, float, float]:
    """One Bernoulli-linear trajectory; returns (violated, worst norm, its radius).

    Features and the true vector are nonnegative so ``theta . x`` already
    lies in [0, 1] and no clipping distorts the linear model.
    """
    theta = np.abs(rng.standard_normal(d))
    theta /= np.linalg.norm(theta)
    X = np.abs(rng.standard_normal((horizon, d)))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    y = (rng.random(horizon) < X @ theta).astype(float)
    M = lam * np.eye(d) + np.cumsum(X[:, :, None] * X[:, None, :], axis=0)
    b = np.cumsum(X * y[:, None], axis=0)
    err = np.linalg.solve(M, b[:, :, None])[:, :, 0] - theta
    norms = np.sqrt(np.einsum("ti,tij,tj->t", err, M, err))
    t = np.arange(1, horizon + 1)
    radius = np.sqrt(d * np.log1p(t / (lam * d)) + 2 * math.log(1 / delta)) + math.sqrt(lam)
    k = int(np.argmax(norms - radius))
    # t = 0: theta_hat = 0 and the norm is sqrt(lam) |theta| = sqrt(lam) <= radius
    return bool(norms[k] > radius[k]), float(norms[k]), float(radius[k])


def check_ellipsoid(trials: int, rng: np.random.Generator, horizon: int = 5000,
                    delta: float = 0.1, invert: bool = False) -> CheckRow:
    bad, worst = 0, _Worst()
    for _ in range(trials):
        violated, emp, bnd = ellipsoid_violation(rng, horizon, delta=delta)
        worst.see(emp, bnd)
        bad += violated != invert
    return _row("confidence_ellipsoid", trials, bad, int(math.floor(delta * trials)), worst.pair)


def run_suites(cfg: BoundsCheckConfig | None = None, invert: bool = False,
               include_ellipsoid: bool = True) -> list[CheckRow]:
    """Runs every suite with a nonzero trial count, each on its own substream."""
    cfg = BoundsCheckConfig() if cfg is None else cfg
    streams = iter(np.random.SeedSequence(cfg.seed).spawn(7))

    def rng():
        return np.random.default_rng(next(streams))

    plan = [
        (cfg.det_trials, lambda n, g: check_det(n, g, invert)),
        (cfg.self_norm_trials, lambda n, g: check_self_norm(n, g, invert)),
        (cfg.lambda_min_trials, lambda n, g: check_lambda_min(
            n, g, cfg.lambda_min_horizon, cfg.delta, invert=invert)),
        (cfg.bernstein_trials, lambda n, g: check_bernstein(n, g, invert=invert)),
        (cfg.log_dominance_trials, lambda n, g: check_log_dominance(n, g, invert)),
        (cfg.gamma_trials, lambda n, g: check_gamma_quotient(n, g, invert)),
    ]
    if include_ellipsoid:
        plan.append((cfg.ellipsoid_trials, lambda n, g: check_ellipsoid(
            n, g, cfg.ellipsoid_horizon, cfg.delta, invert)))
    rows = []
    for n, suite in plan:
        g = rng()  # drawn even when skipped so streams do not shift
        if n > 0:
            rows.append(suite(n, g))
    return rows


def all_passed(rows: list[CheckRow]) -> bool:
    return all(r.passed for r in rows)


def format_table(rows: list[CheckRow]) -> str:
    header = "check,trials,violations,allowed,verdict,worst_empirical,bound"
    lines = [header]
    for r in rows:
        lines.append(f"{r.name},{r.trials},{r.violations},{r.allowed},{r.verdict},"
                     f"{r.worst_empirical:.6g},{r.bound_at_worst:.6g}")
    lines.append(f"overall,{sum(r.trials for r in rows)},{sum(r.violations for r in rows)},,"
                 f"{'pass' if all_passed(rows) else 'fail'},,")
    return "\n".join(lines) + "\n"
