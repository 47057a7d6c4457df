"""Seeded experiment runner shared by the command line and the test suite.

Every (algorithm, seed) cell is independent. Within a seed all algorithms
draw users, item pools and click uniforms from the same substreams, so
their curves are paired: any difference comes from the recommendations.
"""

from __future__ import annotations

import dataclasses
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .baselines import make_baseline
from .bounds_check import BoundsCheckConfig, CheckRow, run_suites
from .club import ClubConfig, ClubLearner
from .environment import (
    InfeasibleMode,
    expected_reward,
    gen_clusters,
    gen_item_pool,
    optimal_list,
    reward_from_probs,
    sample_cascade,
    sample_items,
    click_probability,
)
from .glm import GlmClubLearner
from .replay import extract_features, load_ratings, replay_feedback, split_users

ALGORITHMS = ("club", "club_glm", "single_cluster", "per_user")
CSV_HEADER = "t,algorithm,seed,metric"


class ConfigError(ValueError):
    pass


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _parse_seeds(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    out = []
    for part in _split_list(str(value)):
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


@dataclass
class ExperimentConfig:
    scenario: str = "synth"  # synth | replay | bounds_check
    u: int = 40
    m: int = 5
    L: int = 200
    K: int = 4
    d: int = 20
    T: int = 20_000
    theta_mode: str = "orthogonal"  # orthogonal | gap
    gamma: float | None = None
    pool_mode: str = "fixed"  # fixed: one pool per seed; fresh: new items each round
    lam: float = 4.0
    alpha: float | None = 3.5  # None: sqrt(32 d / lambda_x)
    beta: float | str = 3.0  # or "auto"
    delta: float = 0.1
    algorithms: list[str] = field(default_factory=lambda: ["club", "single_cluster", "per_user"])
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    init: str = "complete"
    edge_prob: float = 1.0
    stride: int = 100
    workers: int = 1
    output: str = ""
    # replay
    ratings: str = ""
    threshold: float | None = None
    feature_users: int = 100
    split_seed: int = 0
    pool_size: int = 0  # 0: every item each round
    # bounds_check
    bounds_scale: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.scenario in ("synth", "replay", "bounds_check"), f"unknown scenario {self.scenario!r}")
        for name in ("u", "m", "L", "K", "d", "stride", "workers", "feature_users"):
            need(int(getattr(self, name)) >= 1, f"{name} must be a positive integer")
        need(self.T >= 0, "T must be nonnegative")
        need(self.K <= self.L, f"K={self.K} exceeds L={self.L}")
        need(self.theta_mode in ("orthogonal", "gap"), f"unknown theta_mode {self.theta_mode!r}")
        if self.scenario == "synth":
            need(self.m <= self.u, f"m={self.m} exceeds u={self.u}")
            if self.theta_mode == "orthogonal":
                need(self.m <= self.d, f"m={self.m} orthogonal vectors need d >= m")
            else:
                need(self.gamma is not None and 0 < self.gamma <= 2, "gap mode needs 0 < gamma <= 2")
        need(self.pool_mode in ("fresh", "fixed"), f"unknown pool_mode {self.pool_mode!r}")
        need(self.lam > 0, "lam must be positive")
        need(self.alpha is None or self.alpha > 0, "alpha must be positive")
        need(self.beta == "auto" or float(self.beta) >= 0, "beta must be nonnegative or 'auto'")
        need(0 < self.delta < 1, "delta must lie in (0, 1)")
        need(len(self.algorithms) > 0, "no algorithms selected")
        for a in self.algorithms:
            need(a in ALGORITHMS, f"unknown algorithm {a!r}")
        need(len(set(self.algorithms)) == len(self.algorithms), "algorithms repeated")
        need(len(self.seeds) > 0, "no seeds given")
        need(self.init in ("complete", "erdos_renyi"), f"unknown init {self.init!r}")
        need(0 <= self.edge_prob <= 1, "edge_prob must lie in [0, 1]")
        need(self.pool_size >= 0, "pool_size must be nonnegative")
        need(self.pool_size == 0 or self.pool_size >= self.K, "pool_size smaller than K")
        need(self.bounds_scale >= 0, "bounds_scale must be nonnegative")
        if self.scenario == "replay":
            need(bool(self.ratings), "replay needs a ratings file")

    def club_config(self, lambda_x: float | None = None) -> ClubConfig:
        return ClubConfig(lam=self.lam, alpha=self.alpha, beta=self.beta, K=self.K, d=self.d,
                          horizon=max(self.T, 1), init=self.init, edge_prob=self.edge_prob,
                          lambda_x=lambda_x, delta=self.delta)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def coerce(key: str, value):
    """Convert a text value to the type of config field ``key``."""
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    if not isinstance(value, str):
        return value
    value = value.strip()
    if key == "algorithms":
        return _split_list(value)
    if key == "seeds":
        try:
            return _parse_seeds(value)
        except ValueError:
            raise ConfigError(f"bad seed list {value!r}") from None
    if key in ("scenario", "theta_mode", "pool_mode", "init", "output", "ratings"):
        return value
    try:
        if key in ("alpha", "gamma", "threshold"):
            return None if value.lower() in ("", "none", "auto") else float(value)
        if key == "beta":
            return "auto" if value.lower() == "auto" else float(value)
        if key in ("lam", "delta", "edge_prob", "bounds_scale"):
            return float(value)
        return int(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = coerce(key, value)
    return out


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    values.update({k: coerce(k, v) for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# -- learners -----------------------------------------------------------------

def make_learner(name: str, cfg: ExperimentConfig, u: int, lambda_x: float):
    ccfg = cfg.club_config(lambda_x)
    if name == "club":
        return ClubLearner(ccfg, u)
    if name == "club_glm":
        return GlmClubLearner(ccfg, u)
    if name in ("single_cluster", "per_user"):
        return make_baseline(name, ccfg, u)
    raise ConfigError(f"unknown algorithm {name!r}")


def _streams(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


# -- synthetic ------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    t: int
    algorithm: str
    seed: int
    metric: float


def _record_rounds(T: int, stride: int) -> set[int]:
    marks = set(range(stride, T + 1, stride))
    if T > 0:
        marks.add(T)
    return marks


def synth_cell(cfg: ExperimentConfig, algorithm: str, seed: int, learner_out: list | None = None
               ) -> list[RunRecord]:
    """One synthetic run; ``learner_out`` receives the final learner and cluster model."""
    s_clusters, s_pool, s_users, s_clicks = _streams(seed, 4)
    clusters = gen_clusters(cfg.u, cfg.m, cfg.d, cfg.theta_mode, cfg.gamma,
                            rng_seed=np.random.default_rng(s_clusters))
    item_rng = np.random.default_rng(s_pool)
    user_rng = np.random.default_rng(s_users)
    click_rng = np.random.default_rng(s_clicks)
    lambda_x = 1.0 / (2 * cfg.d)  # exact second-moment eigenvalue of the item sampler
    learner = make_learner(algorithm, cfg, cfg.u, lambda_x)

    best_fixed = None
    if cfg.pool_mode == "fixed":
        pool = gen_item_pool(cfg.L, cfg.d, item_rng).X
        best_fixed = [expected_reward(pool[optimal_list(pool, th, cfg.K)], th) for th in clusters.theta]

    marks = _record_rounds(cfg.T, cfg.stride)
    records, regret = [], 0.0
    for t in range(1, cfg.T + 1):
        X = pool if best_fixed is not None else sample_items(cfg.L, cfg.d, item_rng)
        user = int(user_rng.integers(cfg.u))
        j = int(clusters.assignment[user])
        theta = clusters.theta[j]
        probs = click_probability(theta, X)

        def feedback(ids, probs=probs):
            return sample_cascade(probs[ids], click_rng)

        chosen, _ = learner.step(user, X, feedback)
        if best_fixed is not None:
            best = best_fixed[j]
        else:
            best = reward_from_probs(probs[optimal_list(X, theta, cfg.K)])
        regret += max(best - reward_from_probs(probs[chosen]), 0.0)
        if t in marks:
            records.append(RunRecord(t, algorithm, seed, regret))
    if learner_out is not None:
        learner_out.extend([learner, clusters])
    return records


# -- replay -------------------------------------------------------------------

@dataclass
class ReplayData:
    X: np.ndarray  # item features, rows in dense item order
    F: object  # RatingsMatrix of replay users


def prepare_replay(cfg: ExperimentConfig) -> ReplayData:
    ratings = load_ratings(cfg.ratings, cfg.threshold)
    split = split_users(ratings, cfg.feature_users, cfg.split_seed)
    X = extract_features(split.H, cfg.d)
    F = split.F
    rng = np.random.default_rng(cfg.split_seed)
    if cfg.u < F.n_users:
        F = F.user_rows(np.sort(rng.choice(F.n_users, cfg.u, replace=False)))
    if cfg.L < X.shape[0]:
        keep = np.sort(rng.choice(X.shape[0], cfg.L, replace=False))
        X = X[keep]
        F = type(F).from_dense(F.dense()[:, keep], user_ids=F.user_ids,
                               item_ids=[F.item_ids[j] for j in keep])
    return ReplayData(X, F)


def replay_cell(cfg: ExperimentConfig, algorithm: str, seed: int, data: ReplayData
                ) -> list[RunRecord]:
    s_users, s_pool = _streams(seed, 2)
    user_rng = np.random.default_rng(s_users)
    pool_rng = np.random.default_rng(s_pool)
    X, F = data.X, data.F
    n_items = X.shape[0]
    if cfg.K > n_items:
        raise ConfigError(f"K={cfg.K} exceeds the {n_items} replay items")
    learner = make_learner(algorithm, cfg, F.n_users, 1.0 / (2 * cfg.d))
    marks = _record_rounds(cfg.T, cfg.stride)
    records, clicks = [], 0
    for t in range(1, cfg.T + 1):
        user = int(user_rng.integers(F.n_users))
        if cfg.pool_size and cfg.pool_size < n_items:
            ids = np.sort(pool_rng.choice(n_items, cfg.pool_size, replace=False))
        else:
            ids = None
        pool = X if ids is None else X[ids]
        _, outcome = learner.step(user, pool, lambda chosen: replay_feedback(F, user, chosen), ids)
        clicks += outcome.clicked
        if t in marks:
            records.append(RunRecord(t, algorithm, seed, float(clicks)))
    return records


# -- orchestration ------------------------------------------------------------------

def _cell(args):
    cfg, algorithm, seed, data = args
    if cfg.scenario == "synth":
        return synth_cell(cfg, algorithm, seed)
    return replay_cell(cfg, algorithm, seed, data)


def _run_cells(cfg: ExperimentConfig, data=None) -> list[RunRecord]:
    jobs = [(cfg, a, s, data) for a in cfg.algorithms for s in cfg.seeds]
    if cfg.workers == 1 or len(jobs) == 1:
        results = [_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_cell, jobs))  # map preserves job order
    return [r for cell in results for r in cell]


def run_synth(cfg: ExperimentConfig) -> list[RunRecord]:
    if cfg.scenario != "synth":
        raise ConfigError("run_synth needs scenario=synth")
    try:
        return _run_cells(cfg)
    except InfeasibleMode as exc:
        raise ConfigError(str(exc)) from None


def run_replay(cfg: ExperimentConfig, ratings_path: str | None = None) -> list[RunRecord]:
    if ratings_path is not None:
        cfg = dataclasses.replace(cfg, ratings=str(ratings_path))
    if cfg.scenario != "replay":
        raise ConfigError("run_replay needs scenario=replay")
    return _run_cells(cfg, prepare_replay(cfg))


def run_bounds_check(cfg: ExperimentConfig, invert: bool = False) -> list[CheckRow]:
    base = BoundsCheckConfig(delta=cfg.delta, seed=cfg.seeds[0])
    scaled = {f.name: int(math.ceil(getattr(base, f.name) * cfg.bounds_scale))
              for f in dataclasses.fields(base) if f.name.endswith("_trials")}
    return run_suites(dataclasses.replace(base, **scaled), invert=invert)


# -- output ---------------------------------------------------------------------------

def format_records(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in records:
        buf.write(f"{r.t},{r.algorithm},{r.seed},{r.metric:.17g}\n")
    return buf.getvalue()


def write_records(records: Iterable[RunRecord], path: str | Path | None) -> str:
    text = format_records(records)
    if path:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_records(path: str | Path) -> list[RunRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ConfigError(f"{path}: missing header {CSV_HEADER!r}")
    out = []
    for line in lines[1:]:
        if line.strip():
            t, alg, seed, metric = line.split(",")
            out.append(RunRecord(int(t), alg, int(seed), float(metric)))
    return out


def aggregate(records: Iterable[RunRecord]) -> list[tuple[int, str, int, float]]:
    """Mean metric over seeds for every (algorithm, t), algorithms in first-seen order."""
    groups: dict[tuple[str, int], list[float]] = {}
    order: list[str] = []
    for r in records:
        if r.algorithm not in order:
            order.append(r.algorithm)
        groups.setdefault((r.algorithm, r.t), []).append(r.metric)
    rows = []
    for alg in order:
        for (a, t), vals in sorted(groups.items(), key=lambda kv: kv[0][1]):
            if a == alg:
                rows.append((t, alg, len(vals), float(np.mean(vals))))
    return rows


def format_aggregate(rows) -> str:
    lines = ["t,algorithm,n_seeds,mean"]
    lines += [f"{t},{a},{n},{m:.17g}" for t, a, n, m in rows]
    return "\n".join(lines) + "\n"


def final_metric(records: Iterable[RunRecord], algorithm: str) -> dict[int, float]:
    """Last recorded metric per seed."""
    out: dict[int, tuple[int, float]] = {}
    for r in records:
        if r.algorithm == algorithm and (r.seed not in out or r.t > out[r.seed][0]):
            out[r.seed] = (r.t, r.metric)
    return {s: v for s, (_, v) in sorted(out.items())}


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
