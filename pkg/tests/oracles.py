"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here calls into the package; every routine is written from scratch
with plain loops so that agreement with the library is meaningful.
"""

from __future__ import annotations

import itertools
import math
from collections import deque


def gauss_solve(A, b):
    """Gaussian elimination with partial pivoting on Python floats."""
    n = len(A)
    M = [list(map(float, A[i])) + [float(b[i])] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            for c in range(col, n + 1):
                M[r][c] -= f * M[col][c]
    x = [0.0] * n
    for r in reversed(range(n)):
        x[r] = (M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))) / M[r][r]
    return x


def det_cofactor(A):
    """Laplace expansion along the first row."""
    n = len(A)
    if n == 1:
        return float(A[0][0])
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in (list(r) for r in A[1:])]
        total += (-1) ** j * float(A[0][j]) * det_cofactor(minor)
    return total


def inverse_3x3(A):
    """Adjugate divided by the determinant."""
    a = [[float(v) for v in row] for row in A]
    cof = [[0.0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            rows = [r for r in range(3) if r != i]
            cols = [c for c in range(3) if c != j]
            m = a[rows[0]][cols[0]] * a[rows[1]][cols[1]] - a[rows[0]][cols[1]] * a[rows[1]][cols[0]]
            cof[i][j] = (-1) ** (i + j) * m
    det = sum(a[0][j] * cof[0][j] for j in range(3))
    return [[cof[j][i] / det for j in range(3)] for i in range(3)]


def eig_sym_2x2(a, b, c):
    """Eigenvalues of [[a, b], [b, c]] from the characteristic polynomial, ascending."""
    mean = (a + c) / 2
    rad = math.sqrt(((a - c) / 2) ** 2 + b * b)
    return mean - rad, mean + rad


def jacobi_eigenvalues(A, tol=1e-14, sweeps=100):
    """Cyclic Jacobi rotations; returns eigenvalues sorted descending."""
    n = len(A)
    a = [[float(v) for v in row] for row in A]
    for _ in range(sweeps):
        off = sum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j)
        if off < tol**2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p][q]) < 1e-300:
                    continue
                theta = (a[q][q] - a[p][p]) / (2 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p], a[k][q] = c * akp - s * akq, s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k], a[q][k] = c * apk - s * aqk, s * apk + c * aqk
    return sorted((a[i][i] for i in range(n)), reverse=True)


def clamp01(v):
    return min(max(v, 0.0), 1.0)


def cascade_reward(probs):
    prod = 1.0
    for p in probs:
        prod *= 1.0 - p
    return 1.0 - prod


def best_list_reward(X, theta, K):
    """Maximum expected reward over every ordered K-list of distinct rows."""
    probs = [clamp01(sum(xi * ti for xi, ti in zip(x, theta))) for x in X]
    return max(cascade_reward([probs[i] for i in perm])
               for perm in itertools.permutations(range(len(X)), K))


def best_subsets(scores, K):
    """All K-subsets whose score multiset is maximal."""
    best, out = None, []
    for combo in itertools.combinations(range(len(scores)), K):
        key = sorted((scores[i] for i in combo), reverse=True)
        if best is None or key > best:
            best, out = key, [combo]
        elif key == best:
            out.append(combo)
    return out


def top_k_by_sort(scores, K, ids=None):
    """Stable sort on (-score, id)."""
    ids = list(range(len(scores))) if ids is None else list(ids)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], ids[i]))
    return order[:K]


def bfs_components(u, edges):
    adj = {i: set() for i in range(u)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen, parts = set(), set()
    for s in range(u):
        if s in seen:
            continue
        comp, queue = {s}, deque([s])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in comp:
                    comp.add(w)
                    queue.append(w)
        seen |= comp
        parts.add(frozenset(comp))
    return parts


def first_positive(row_positives, items):
    """1-based position of the first listed item in the set, else None."""
    for k, item in enumerate(items, start=1):
        if item in row_positives:
            return k
    return None
