"""Explicit orbit points whose joint marginal spectrum no diagonal arrangement majorizes.

Every witness starts from a diagonal arrangement of the spectrum and
rotates two positions that lie in different blocks and different
columns, so both partial traces stay diagonal and the joint spectrum is
read off the rotated diagonal. The claim is then checked by brute force
against one representative of every canonical partition class.
"""
from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ptbounds.bipartite_core import BipartiteShape, index_split
from ptbounds.config import load_tolerances
from ptbounds.errors import DomainError, PreconditionError, ShapeError
from ptbounds.majorization import first_violation, majorizes, sorted_desc, two_index_rotation
from ptbounds.partition_classes import iter_canonical_classes
from ptbounds.spectral_bounds import (
    DiagonalArrangement,
    JointMarginalSpectrum,
    characterize_2xd,
    joint_marginals_of_diagonal,
    rank_of,
)

logger = logging.getLogger(__name__)


class WitnessFamily(str, Enum):
    RANK_BAND = "rank-band"
    LOW_RANK = "low-rank"
    IMPOSSIBLE_RANK = "impossible-rank"
    TWO_BY_D = "2xd"


class ClassFailure(BaseModel):
    """Where one canonical class fails to majorize the witness."""

    arrangement: List[float] = Field(..., description="Block-sorted class representative")
    prefix: int = Field(..., description="First prefix length k where the class sum falls short")
    first_count: int = Field(..., description="How many of the witness's top-k entries come from the first marginal")
    second_count: int = Field(..., description="How many come from the second marginal")
    witness_sum: float
    class_sum: float


class RefutationCertificate(BaseModel):
    classes_checked: int = 0
    distinct_joint_spectra: int = 0
    failures: List[ClassFailure] = Field(default_factory=list)
    majorizing_class: Optional[List[float]] = Field(None, description="A class whose joint spectrum majorizes the target")


class WitnessReport(BaseModel):
    family: WitnessFamily
    construction: str = Field(..., description="Which variant of the family was used")
    shape: Tuple[int, int]
    spectrum: List[float]
    arrangement: List[float] = Field(..., description="Diagonal before the rotation")
    rotation: Tuple[int, int] = Field(..., description="1-based positions mixed by the rotation")
    alpha: float
    alpha_window: Tuple[float, float]
    witness_diagonal: List[float]
    joint_first: List[float]
    joint_second: List[float]
    refuted: bool
    certificate: RefutationCertificate
    chain: Optional[Dict[str, List[float]]] = None

    @property
    def bipartite_shape(self) -> BipartiteShape:
        return BipartiteShape(*self.shape)

    def joint(self) -> JointMarginalSpectrum:
        return JointMarginalSpectrum(np.array(self.joint_first), np.array(self.joint_second))

    def witness_matrix(self) -> np.ndarray:
        """The rotated matrix itself; its diagonal is ``witness_diagonal``."""
        i, j = self.rotation
        return two_index_rotation(np.array(self.arrangement), i, j, self.alpha)


def _top_k_origin(x: JointMarginalSpectrum, k: int) -> Tuple[int, int]:
    vec = x.vector
    origin = np.concatenate([np.ones(x.first.size, dtype=int), np.full(x.second.size, 2)])
    top = origin[np.argsort(-vec, kind="stable")[:k]]
    return int(np.count_nonzero(top == 1)), int(np.count_nonzero(top == 2))


def refute_diagonal_majorization(
    x: JointMarginalSpectrum,
    lam,
    shape: BipartiteShape,
    tol: Optional[float] = None,
    guard: Optional[int] = None,
) -> Tuple[bool, RefutationCertificate]:
    """True iff no diagonal arrangement of ``lam`` has a joint spectrum majorizing ``x``.

    Classes with the same sorted joint spectrum are checked once, which
    also folds away the factor flip when ``d1 == d2``.
    """
    target = x.vector
    if target.size != shape.d1 + shape.d2:
        raise ShapeError(f"joint spectrum has {target.size} entries, expected {shape.d1 + shape.d2}")
    xs = sorted_desc(target)
    prefix_x = np.cumsum(xs)
    cert = RefutationCertificate()
    seen = set()
    for c in iter_canonical_classes(lam, shape, guard):
        cert.classes_checked += 1
        y = joint_marginals_of_diagonal(c).vector
        ys = sorted_desc(y)
        key = tuple(np.round(ys, 12))
        if key in seen:
            continue
        seen.add(key)
        k = first_violation(ys, xs, tol)
        if k is None:
            cert.distinct_joint_spectra = len(seen)
            cert.majorizing_class = c.values.tolist()
            logger.info("class %s majorizes the target", np.round(c.values, 6).tolist())
            return False, cert
        k1, k2 = _top_k_origin(x, k)
        cert.failures.append(
            ClassFailure(
                arrangement=c.values.tolist(),
                prefix=k,
                first_count=k1,
                second_count=k2,
                witness_sum=float(prefix_x[k - 1]),
                class_sum=float(np.cumsum(ys)[k - 1]),
            )
        )
    cert.distinct_joint_spectra = len(seen)
    logger.info("refuted against %d classes (%d distinct joint spectra)", cert.classes_checked, len(seen))
    return True, cert


def min_nonzero_marginal(lam, shape: BipartiteShape, guard: Optional[int] = None) -> float:
    """Smallest nonzero entry over the joint spectra of all canonical classes."""
    lam = sorted_desc(lam)
    cutoff = load_tolerances().rank_rtol * max(1.0, float(np.abs(lam).max(initial=0.0)))
    best = math.inf
    for c in iter_canonical_classes(lam, shape, guard):
        y = np.abs(joint_marginals_of_diagonal(c).vector)
        nz = y[y > cutoff]
        if nz.size:
            best = min(best, float(nz.min()))
    return best


def _auto_alpha(m: float, window: Tuple[float, float]) -> float:
    lo, hi = window
    alpha = m / 2
    if alpha >= hi:
        alpha = min(m, hi) / 2
    if not lo < alpha < hi:
        alpha = (lo + hi) / 2
    return alpha


def _psd_spectrum(lam, n: int) -> np.ndarray:
    lam = sorted_desc(lam)
    if lam.size != n:
        raise ShapeError(f"spectrum has {lam.size} entries, expected {n}")
    floor = -load_tolerances().psd_atol * max(1.0, abs(lam[0]))
    if lam[-1] < floor:
        raise DomainError("witness constructions need a positive semidefinite spectrum")
    return np.clip(lam, 0.0, None)


def _witness(
    family: WitnessFamily,
    construction: str,
    lam: np.ndarray,
    shape: BipartiteShape,
    arrangement: np.ndarray,
    rotation: Tuple[int, int],
    window: Tuple[float, float],
    alpha: Optional[float],
    guard: Optional[int] = None,
    chain: Optional[Dict[str, List[float]]] = None,
    below_marginals: bool = False,
) -> WitnessReport:
    """Rotate ``rotation`` by ``alpha`` and refute.

    With ``below_marginals`` the window is also capped at the smallest
    nonzero joint-marginal entry over all classes.
    """
    i, j = rotation
    (bi, ci), (bj, cj) = index_split(i, shape), index_split(j, shape)
    if bi == bj or ci == cj:
        raise PreconditionError(f"positions {i} and {j} share a block or a column")
    lo, hi = window
    m = None
    if below_marginals or alpha is None:
        m = min_nonzero_marginal(lam, shape, guard)
    if below_marginals:
        hi = min(hi, m)
    if not lo < hi:
        raise PreconditionError(f"empty alpha window ({lo:.6g}, {hi:.6g})")
    if alpha is None:
        alpha = _auto_alpha(m, (lo, hi))
    elif not lo < alpha < hi:
        raise DomainError(f"alpha={alpha} outside ({lo:.6g}, {hi:.6g})")

    c = arrangement.astype(float).copy()
    s = np.sign(c[i - 1] - c[j - 1])
    c[i - 1] -= s * alpha
    c[j - 1] += s * alpha
    joint = joint_marginals_of_diagonal(DiagonalArrangement(c, shape))
    refuted, cert = refute_diagonal_majorization(joint, lam, shape, guard=guard)
    logger.info("%s witness (%s) on %s, alpha=%.6g: refuted=%s", family.value, construction, shape, alpha, refuted)
    return WitnessReport(
        family=family,
        construction=construction,
        shape=(shape.d1, shape.d2),
        spectrum=lam.tolist(),
        arrangement=arrangement.tolist(),
        rotation=(i, j),
        alpha=float(alpha),
        alpha_window=(float(lo), float(hi)),
        witness_diagonal=c.tolist(),
        joint_first=joint.first.tolist(),
        joint_second=joint.second.tolist(),
        refuted=refuted,
        certificate=cert,
        chain=chain,
    )


def _fill_blocks(nonzero: np.ndarray, shape: BipartiteShape, widths: List[int]) -> np.ndarray:
    # block b receives the next widths[b] values, padded with zeros
    out = np.zeros(shape.total)
    start = 0
    for b, w in enumerate(widths):
        out[b * shape.d2:b * shape.d2 + w] = nonzero[start:start + w]
        start += w
    return out


def rank_bands(shape: BipartiteShape) -> List[Tuple[int, int, int]]:
    """``(k, low, high)`` with band k holding ranks ``low < r <= high``."""
    return [(k, (k - 1) * shape.d2, k * (shape.d2 - 1)) for k in range(2, shape.d1 + 1)]


def witness_rank_band(
    lam, shape: BipartiteShape, k: Optional[int] = None, alpha: Optional[float] = None, guard: Optional[int] = None
) -> WitnessReport:
    if shape.d1 > shape.d2:
        raise PreconditionError(f"rank-band witness needs d1 <= d2, got {shape}")
    lam = _psd_spectrum(lam, shape.total)
    r = rank_of(lam)
    bands = {kk: (low, high) for kk, low, high in rank_bands(shape)}
    if k is None:
        k = next((kk for kk, (low, high) in bands.items() if low < r <= high), None)
        if k is None:
            raise PreconditionError(f"rank {r} lies in no band for shape {shape}")
    if k not in bands or not bands[k][0] < r <= bands[k][1]:
        raise PreconditionError(f"rank {r} outside band k={k} for shape {shape}")

    d2 = shape.d2
    widths = [d2 - 1] * (k - 1) + [r - (k - 1) * (d2 - 1)]
    arrangement = _fill_blocks(lam[:r], shape, widths)
    return _witness(
        WitnessFamily.RANK_BAND,
        f"k={k}",
        lam,
        shape,
        arrangement,
        (d2, d2 + 1),
        (0.0, lam[d2 - 1]),
        alpha,
        guard,
        below_marginals=True,
    )


def chain_d2_minus_1(lambda_r, sigma=None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectors ``a <= b <= c`` in the majorization order.

    ``sigma`` is a 0-based permutation of the entries (identity by
    default). A single entry has no distinct pair to merge, so all three
    vectors coincide with ``c``.
    """
    lam = np.asarray(lambda_r, dtype=float).ravel()
    if np.any(lam < 0):
        raise DomainError("chain vectors need a nonnegative input")
    r = lam.size
    if r == 0:
        raise ShapeError("chain needs at least one entry")
    c = np.concatenate([[lam.sum()], lam, [0.0]])
    if r == 1:
        return c.copy(), c.copy(), c
    order = np.arange(r) if sigma is None else np.asarray(sigma, dtype=int)
    if sorted(order.tolist()) != list(range(r)):
        raise DomainError(f"sigma is not a permutation of 0..{r - 1}")
    ls = lam[order]
    head = ls[:-1].sum()
    a = np.concatenate([[head], ls, [ls[-1]]])
    b = np.concatenate([[head, ls[0] + ls[-1]], ls[1:], [0.0]])
    return a, b, c


def witness_low_rank(
    lam, shape: BipartiteShape, alpha: Optional[float] = None, guard: Optional[int] = None
) -> WitnessReport:
    if shape.d1 >= shape.d2:
        raise PreconditionError(f"low-rank witness needs d1 < d2, got {shape}")
    lam = _psd_spectrum(lam, shape.total)
    r = rank_of(lam)
    if not 4 <= r <= shape.d2:
        raise PreconditionError(f"low-rank witness needs 4 <= rank <= {shape.d2}, got {r}")
    arrangement = _fill_blocks(lam[:r], shape, [r - 2, 2])
    a, b, c = chain_d2_minus_1(lam[:r])
    if not (majorizes(b, a) and majorizes(c, b)):
        raise PreconditionError("chain vectors out of order")
    return _witness(
        WitnessFamily.LOW_RANK,
        f"r={r}",
        lam,
        shape,
        arrangement,
        (shape.d2, shape.d2 + 2),
        (0.0, lam[r - 1]),
        alpha,
        guard,
        chain={"a": a.tolist(), "b": b.tolist(), "c": c.tolist()},
        below_marginals=True,
    )


def _largest_k(r: int, u: int, d: int, start: int, extra: int) -> int:
    k = start
    while r <= (u - (k + 1)) * (u + (k + 1) + extra) and u + (k + 1) + extra <= d:
        k += 1
    return k


def impossible_rank_layout(d: int, r: int) -> Tuple[str, int, int]:
    """``(case, width, height)``: ``height`` blocks holding at most ``width`` nonzeros each."""
    if d < 3:
        raise PreconditionError("impossible-rank witness needs d >= 3")
    if r <= 3:
        raise PreconditionError(f"rank {r} <= 3 is covered by a sufficiency case")
    u = math.isqrt(r)
    excess = r - u * u
    if excess == 0 and r < d * d:
        return "perfect-square", u, u
    if 0 < excess <= u and r < (d - math.sqrt(d)) ** 2:
        k = _largest_k(r, u, d, 0, 1)
        return "near-square", u + k + 1, u - k
    if excess > u and r < (d - math.sqrt(2 * d)) ** 2:
        k = _largest_k(r, u, d, -1, 2)
        return "above-square", u + k + 2, u - k
    raise PreconditionError(f"rank {r} fits no impossible-rank case for d={d}")


def witness_impossible_rank(
    lam, d: int, alpha: Optional[float] = None, guard: Optional[int] = None
) -> WitnessReport:
    shape = BipartiteShape(d, d)
    lam = _psd_spectrum(lam, shape.total)
    r = rank_of(lam)
    case, width, height = impossible_rank_layout(d, r)
    if width >= d or height < 2:
        raise PreconditionError(f"layout {width}x{height} leaves no free column for rank {r}, d={d}")
    widths = [width] * (height - 1) + [r - width * (height - 1)]
    arrangement = _fill_blocks(lam[:r], shape, widths)
    pivot = arrangement[d]
    if pivot <= 0:
        raise PreconditionError(f"second block is empty for rank {r}, d={d}")
    return _witness(
        WitnessFamily.IMPOSSIBLE_RANK,
        case,
        lam,
        shape,
        arrangement,
        (width + 1, d + 1),
        (0.0, pivot),
        alpha,
        guard,
        below_marginals=True,
    )


def witness_2xd(lam, d: int, alpha: Optional[float] = None, guard: Optional[int] = None) -> WitnessReport:
    """Witness for a qubit-qudit spectrum outside every characterization case."""
    shape = BipartiteShape(2, d)
    lam = _psd_spectrum(lam, shape.total)
    verdict = characterize_2xd(lam, d)
    if verdict:
        cases = ", ".join(sorted(c.value for c in verdict.applicable_cases))
        raise PreconditionError(f"no witness exists: {cases} applies")
    r = rank_of(lam)
    if r <= d:
        return witness_low_rank(lam, shape, alpha, guard)
    if r <= 2 * d - 2:
        return witness_rank_band(lam, shape, 2, alpha, guard)

    tol = load_tolerances().equality_atol * (1.0 + lam[0])
    arrangement = lam.copy()
    v = lam[d - 1]
    if v - lam[2 * d - 2] > tol:
        below = lam[lam < v - tol]
        lo = max(0.0, v - lam[d:2 * d - 1].sum())
        hi = v - below.max()
        return _witness(WitnessFamily.TWO_BY_D, "tail-gap", lam, shape, arrangement, (d, 2 * d - 1), (lo, hi), alpha, guard)

    # lam_d = ... = lam_{2d-1}; q is the last index strictly above that level
    q = int(np.flatnonzero(lam > v + tol)[-1]) + 1
    gap = lam[q - 1] - v
    lo = max(gap - (d - 3) * v - lam[2 * d - 1], 0.0)
    hi = min(gap, (d - 2) * v) if q == 2 else gap
    return _witness(
        WitnessFamily.TWO_BY_D, f"flat-tail q={q}", lam, shape, arrangement, (q, d + 1), (lo, hi), alpha, guard
    )


def build_witness(
    family: WitnessFamily, lam, shape: BipartiteShape, alpha: Optional[float] = None, guard: Optional[int] = None
) -> WitnessReport:
    if family is WitnessFamily.RANK_BAND:
        return witness_rank_band(lam, shape, None, alpha, guard)
    if family is WitnessFamily.LOW_RANK:
        return witness_low_rank(lam, shape, alpha, guard)
    if family is WitnessFamily.IMPOSSIBLE_RANK:
        if not shape.is_square:
            raise ShapeError(f"impossible-rank witness needs a square shape, got {shape}")
        return witness_impossible_rank(lam, shape.d1, alpha, guard)
    if shape.d1 != 2:
        raise ShapeError(f"2xd witness needs d1 = 2, got {shape}")
    return witness_2xd(lam, shape.d2, alpha, guard)
