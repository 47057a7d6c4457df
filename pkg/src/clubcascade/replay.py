"""Offline replay: binary rating matrices, SVD item features, logged clicks.

A ratings file is split by user into a feature population ``H`` (used only
to build item features) and a replay population ``F`` whose positive
entries act as the click oracle during evaluation.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .environment import NO_CLICK, CascadeOutcome
from .linalg import truncated_svd

RANK_TOL = 1e-10


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyInput(ValueError):
    pass


class TooFewUsers(ValueError):
    pass


class RankDeficient(UserWarning):
    pass


@dataclass
class RatingsMatrix:
    """Binary user-item matrix over dense 0-based ids.

    ``user_ids[k]`` / ``item_ids[k]`` hold the original identifier of dense
    id ``k``; they default to the dense ids themselves.
    """

    n_users: int
    n_items: int
    positives: frozenset[tuple[int, int]]
    user_ids: list[str] = field(default_factory=list)
    item_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.positives = frozenset((int(i), int(j)) for i, j in self.positives)
        for i, j in self.positives:
            if not (0 <= i < self.n_users and 0 <= j < self.n_items):
                raise ValueError(f"entry ({i}, {j}) out of range")
        if not self.user_ids:
            self.user_ids = [str(i) for i in range(self.n_users)]
        if not self.item_ids:
            self.item_ids = [str(j) for j in range(self.n_items)]
        self._dense = None

    @classmethod
    def from_dense(cls, H: np.ndarray, **kw) -> "RatingsMatrix":
        H = np.asarray(H, dtype=bool)
        rows, cols = np.nonzero(H)
        return cls(H.shape[0], H.shape[1], frozenset(zip(rows.tolist(), cols.tolist())), **kw)

    def dense(self) -> np.ndarray:
        if self._dense is None:
            D = np.zeros((self.n_users, self.n_items), dtype=bool)
            if self.positives:
                idx = np.array(sorted(self.positives))
                D[idx[:, 0], idx[:, 1]] = True
            D.flags.writeable = False
            self._dense = D
        return self._dense

    def user_rows(self, users: Sequence[int]) -> "RatingsMatrix":
        """Sub-matrix of the given users, re-indexed in the given order."""
        return RatingsMatrix.from_dense(self.dense()[np.asarray(users, dtype=int)],
                                        user_ids=[self.user_ids[i] for i in users],
                                        item_ids=list(self.item_ids))


@dataclass
class ReplaySplit:
    H: RatingsMatrix
    F: RatingsMatrix
    feature_user_count: int


def load_ratings(path: str | Path, threshold: float | None = None) -> RatingsMatrix:
    """Read ``user_id,item_id[,rating]`` rows.

    With a rating column, rows with ``rating >= threshold`` are positive
    (every row is positive when ``threshold`` is None). Users and items get
    dense ids in order of first appearance, including those with no
    positive row.
    """
    users: dict[str, int] = {}
    items: dict[str, int] = {}
    positives: set[tuple[int, int]] = set()
    seen_row = False
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if not seen_row and row[0].strip().lower().startswith("user"):
                seen_row = True
                continue
            seen_row = True
            if len(row) not in (2, 3):
                raise ParseError(lineno, f"expected 2 or 3 fields, got {len(row)}")
            uid, iid = row[0].strip(), row[1].strip()
            if not uid or not iid:
                raise ParseError(lineno, "empty user or item id")
            positive = True
            if len(row) == 3:
                try:
                    rating = float(row[2])
                except ValueError:
                    raise ParseError(lineno, f"bad rating {row[2]!r}") from None
                positive = threshold is None or rating >= threshold
            u = users.setdefault(uid, len(users))
            i = items.setdefault(iid, len(items))
            if positive:
                positives.add((u, i))
    if not users:
        raise EmptyInput(f"{path} contains no ratings")
    return RatingsMatrix(len(users), len(items), frozenset(positives),
                         user_ids=list(users), item_ids=list(items))


def write_ratings(path: str | Path, M: RatingsMatrix) -> None:
    """Positive entries as ``user,item`` rows with original ids."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user", "item"])
        for i, j in sorted(M.positives):
            w.writerow([M.user_ids[i], M.item_ids[j]])


def write_id_map(path: str | Path, ids: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["orig_id", "dense_id"])
        for k, orig in enumerate(ids):
            w.writerow([orig, k])


def write_features(path: str | Path, X: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("item_id," + ",".join(f"v{k + 1}" for k in range(X.shape[1])) + "\n")
        for j, row in enumerate(X):
            fh.write(f"{j}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def read_features(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)[:, 1:]


def split_users(M: RatingsMatrix, n_feature_users: int, rng_seed=0) -> ReplaySplit:
    if not 0 < n_feature_users < M.n_users:
        raise TooFewUsers(
            f"cannot take {n_feature_users} feature users out of {M.n_users} and keep a replay user")
    perm = np.random.default_rng(rng_seed).permutation(M.n_users)
    feat, rest = np.sort(perm[:n_feature_users]), np.sort(perm[n_feature_users:])
    return ReplaySplit(M.user_rows(feat), M.user_rows(rest), n_feature_users)


def extract_features(H: RatingsMatrix | np.ndarray, d: int, seed: int = 0) -> np.ndarray:
    """Item features ``V diag(s)`` from the top-``d`` SVD, scaled into the unit ball.

    Directions with negligible singular value are left as zero columns and
    reported with a :class:`RankDeficient` warning.
    """
    A = (H.dense() if isinstance(H, RatingsMatrix) else np.asarray(H)).astype(float)
    if not 1 <= d <= min(A.shape):
        raise ValueError(f"need 1 <= d <= {min(A.shape)}, got d={d}")
    if not A.any():
        raise ValueError("rating matrix has no positive entry")
    _, s, V = truncated_svd(A, d, seed=seed)
    weak = s < RANK_TOL * s[0]
    if weak.any():
        warnings.warn(f"only {int((~weak).sum())} of {d} singular values are significant",
                      RankDeficient, stacklevel=2)
    s = np.where(weak, 0.0, s)
    # fix each direction's sign so features do not depend on the solver's choice
    pivot = V[np.argmax(np.abs(V), axis=0), np.arange(d)]
    V = V * np.where(pivot < 0, -1.0, 1.0)
    X = V * s
    return X / np.linalg.norm(X, axis=1).max()


def replay_feedback(F: RatingsMatrix, user: int, items: Sequence[int]) -> CascadeOutcome:
    """First listed item the user rated positively; nothing past it is revealed."""
    row = F.dense()[user]
    hits = np.flatnonzero(row[np.asarray(items, dtype=int)])
    if hits.size == 0:
        return CascadeOutcome.from_click(NO_CLICK, len(items))
    return CascadeOutcome.from_click(int(hits[0]) + 1, len(items))


def cumulative_clicks(outcomes: Iterable[CascadeOutcome]) -> np.ndarray:
    return np.cumsum([o.clicked for o in outcomes], dtype=np.int64)


def make_clustered_ratings(n_users: int, n_items: int, n_clusters: int, rank: int = 10,
                           scale: float = 4.0, bias: float = -6.0, rng_seed=0):
    """Binary matrix from a clustered latent-factor model.

    Items get random factors ``v`` in ``R^rank``; every cluster gets a
    preference vector ``w`` and all its users share it. A user rates an item
    positively with probability ``sigmoid(scale * w . v + bias)``, so users of
    one cluster agree in distribution but not entry by entry.
    Returns ``(matrix, user_cluster)``.
    """
    if not 1 <= n_clusters <= n_users:
        raise ValueError("need 1 <= n_clusters <= n_users")
    if rank < 1 or n_items < 1:
        raise ValueError("rank and n_items must be positive")
    rng = np.random.default_rng(rng_seed)
    user_cluster = rng.integers(n_clusters, size=n_users)
    user_cluster[rng.choice(n_users, n_clusters, replace=False)] = np.arange(n_clusters)
    V = rng.standard_normal((n_items, rank)) / np.sqrt(rank)
    W = rng.standard_normal((n_clusters, rank))
    P = expit(scale * W[user_cluster] @ V.T + bias)
    return RatingsMatrix.from_dense(rng.random(P.shape) < P), user_cluster
