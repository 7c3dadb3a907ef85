"""Majorization tests, two-index rotations and the Horn inverse.

``majorizes(y, x)`` answers ``x <= y`` in the majorization order: every
prefix sum of ``x`` sorted decreasingly is at most the matching prefix
sum of ``y``, with equal totals. Slack is additive and scaled by
``max(1, ||y||_1)``.
"""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from ptbounds.config import default_atol
from ptbounds.errors import DomainError, PreconditionError, ShapeError

logger = logging.getLogger(__name__)


def sorted_desc(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise DomainError("vector has non-finite entries")
    return np.sort(arr)[::-1]


def _prefix_gaps(y, x):
    ys, xs = sorted_desc(y), sorted_desc(x)
    if ys.size != xs.size:
        raise ShapeError(f"length mismatch: {ys.size} vs {xs.size}")
    return np.cumsum(ys) - np.cumsum(xs), max(1.0, float(np.abs(ys).sum()))


def _resolve(tol: Optional[float]) -> float:
    return default_atol() if tol is None else float(tol)


def majorizes(y, x, tol: Optional[float] = None) -> bool:
    """True iff ``x`` is majorized by ``y``."""
    gaps, scale = _prefix_gaps(y, x)
    slack = _resolve(tol) * scale
    if gaps.size == 0:
        return True
    return bool(np.all(gaps[:-1] >= -slack) and abs(gaps[-1]) <= slack)


def weakly_majorizes(y, x, tol: Optional[float] = None) -> bool:
    """True iff ``x`` is weakly (sub)majorized by ``y``: prefix sums only."""
    gaps, scale = _prefix_gaps(y, x)
    return bool(np.all(gaps >= -_resolve(tol) * scale))


def first_violation(y, x, tol: Optional[float] = None, weak: bool = False) -> Optional[int]:
    """1-based prefix length at which ``x <= y`` first fails, or None.

    For strong majorization an unequal total is reported at the full length.
    """
    gaps, scale = _prefix_gaps(y, x)
    slack = _resolve(tol) * scale
    bad = np.flatnonzero(gaps < -slack)
    if bad.size:
        return int(bad[0]) + 1
    if not weak and gaps.size and abs(gaps[-1]) > slack:
        return int(gaps.size)
    return None


def majorization_slack(y, x) -> float:
    """Smallest prefix gap ``min_k (Y_k - X_k)``; negative means violated."""
    gaps, _ = _prefix_gaps(y, x)
    return float(gaps.min()) if gaps.size else 0.0


def _rotation(ci: float, cj: float, target_i: float) -> tuple[float, float]:
    if ci == cj:
        return 1.0, 0.0
    cos2 = float(np.clip((target_i - cj) / (ci - cj), 0.0, 1.0))
    return float(np.sqrt(cos2)), float(np.sqrt(1.0 - cos2))


def two_index_rotation(c, i: int, j: int, alpha: float) -> np.ndarray:
    """Rotate diagonal positions ``i`` and ``j`` (1-based) of ``diag(c)``.

    The result is real symmetric with the spectrum of ``c``; entries ``i``
    and ``j`` of its diagonal move toward each other by ``alpha`` and the
    only off-diagonal entries sit at ``(i, j)`` and ``(j, i)``.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    if not (1 <= i <= n and 1 <= j <= n) or i == j:
        raise ShapeError(f"rotation indices ({i}, {j}) invalid for length {n}")
    a, b = i - 1, j - 1
    gap = abs(c[a] - c[b])
    if not 0 < alpha < gap:
        raise DomainError(f"alpha={alpha} outside (0, {gap})")
    s = np.sign(c[a] - c[b])
    cos, sin = _rotation(c[a], c[b], c[a] - s * alpha)
    G = np.eye(n)
    G[a, a], G[a, b], G[b, a], G[b, b] = cos, -sin, sin, cos
    M = G @ np.diag(c) @ G.T
    return (M + M.T) / 2


def _horn_frame(c: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # c, lam decreasing with c <= lam; returns orthogonal Q, diag(Q diag(lam) Q^T) = c
    n = c.size
    if n == 1:
        return np.ones((1, 1))
    j = int(np.searchsorted(-lam, -c[0], side="right")) - 1
    j = min(max(j, 0), n - 2)
    hi, lo = lam[j], lam[j + 1]
    c0 = float(np.clip(c[0], lo, hi))
    rest = np.concatenate([lam[:j], [hi + lo - c0], lam[j + 2:]])
    inner = _horn_frame(c[1:], rest)

    cos, sin = _rotation(hi, lo, c0)
    W = np.zeros((n, n))
    for k in range(n):
        if k < j:
            W[1 + k, k] = 1.0
        elif k > j + 1:
            W[k, k] = 1.0
    W[0, j], W[1 + j, j] = cos, sin
    W[0, j + 1], W[1 + j, j + 1] = -sin, cos

    lifted = np.eye(n)
    lifted[1:, 1:] = inner
    return lifted @ W


def horn_matrix(c, lam) -> np.ndarray:
    """Real symmetric matrix with diagonal ``c`` and spectrum ``lam``.

    Built from 2x2 rotations: each step fixes the next diagonal entry by
    rotating an adjacent eigenvalue pair that straddles it.
    """
    c = np.asarray(c, dtype=float).ravel()
    lam = sorted_desc(lam)
    if c.size != lam.size:
        raise ShapeError(f"length mismatch: {c.size} vs {lam.size}")
    if not majorizes(lam, c, 1e-10):
        raise PreconditionError("diagonal is not majorized by the spectrum")
    order = np.argsort(-c, kind="stable")
    Q = _horn_frame(c[order], lam)
    M_sorted = Q @ np.diag(lam) @ Q.T
    M = np.empty_like(M_sorted)
    M[np.ix_(order, order)] = M_sorted
    logger.debug("horn_matrix built for n=%d", c.size)
    return (M + M.T) / 2
