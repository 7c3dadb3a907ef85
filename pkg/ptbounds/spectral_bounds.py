"""Sharp spectral bounds for partial traces over a unitary orbit.

Single-trace maximants (block sums of the sorted spectrum), the Bell
minimant, joint marginal spectra of diagonal arrangements, the envelope
inequality, the sufficiency predicates that decide when a diagonal
arrangement majorizes the whole orbit, and the n-qubit majorant.

Case labels returned in a :class:`SufficiencyVerdict` are members of
:class:`SufficiencyCase`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, List, Optional, Tuple

import numpy as np

from ptbounds.bipartite_core import BipartiteShape, partial_trace, singular_values, spectrum
from ptbounds.config import load_tolerances
from ptbounds.errors import DomainError, PreconditionError, ShapeError
from ptbounds.functionals import FunctionalId, evaluate
from ptbounds.majorization import sorted_desc

logger = logging.getLogger(__name__)


class SufficiencyCase(str, Enum):
    SQUARE_WINDOW_1 = "square-window-1"
    SQUARE_WINDOW_2 = "square-window-2"
    SQUARE_WINDOW_3 = "square-window-3"
    SQUARE_WINDOW_4 = "square-window-4"
    RECT_FLAT_INTERIOR = "rect-flat-interior"
    RECT_LOW_RANK = "rect-rank-le-3"
    TWO_BY_D_LOW_RANK = "2xd-rank-le-3"
    TWO_BY_D_FLAT_INTERIOR = "2xd-flat-interior"
    TWO_BY_D_DOMINANT_SECOND = "2xd-dominant-second"
    TWO_BY_D_QUTRIT_RANK_FIVE = "2xd-qutrit-rank-5"
    SV_SQUARE_WINDOW = "sv-square-window"
    SV_FLAT_INTERIOR = "sv-flat-interior"
    SV_LOW_RANK = "sv-rank-le-3"


_SQUARE_WINDOWS = (
    SufficiencyCase.SQUARE_WINDOW_1,
    SufficiencyCase.SQUARE_WINDOW_2,
    SufficiencyCase.SQUARE_WINDOW_3,
    SufficiencyCase.SQUARE_WINDOW_4,
)


class RankVerdict(str, Enum):
    POSSIBLE = "possible"
    IMPOSSIBLE = "impossible"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class DiagonalArrangement:
    """Diagonal of a matrix on a bipartite shape, factor-1-major."""

    values: np.ndarray
    shape: BipartiteShape

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size != self.shape.total:
            raise ShapeError(f"{vals.size} diagonal entries for shape {self.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def blocks(self) -> np.ndarray:
        return self.values.reshape(self.shape.d1, self.shape.d2)

    def matrix(self) -> np.ndarray:
        return np.diag(self.values)

    def same_as(self, other: "DiagonalArrangement") -> bool:
        return self.shape == other.shape and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class JointMarginalSpectrum:
    first: np.ndarray
    second: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.first, self.second])

    def sorted(self) -> "JointMarginalSpectrum":
        return JointMarginalSpectrum(sorted_desc(self.first), sorted_desc(self.second))


@dataclass
class SufficiencyVerdict:
    applicable_cases: FrozenSet[SufficiencyCase] = frozenset()
    candidates: List[DiagonalArrangement] = field(default_factory=list)
    weak: bool = False

    def __bool__(self) -> bool:
        return bool(self.applicable_cases)

    def add(self, case: SufficiencyCase, *arrangements: DiagonalArrangement) -> None:
        self.applicable_cases = self.applicable_cases | {case}
        for a in arrangements:
            if not any(a.same_as(b) for b in self.candidates):
                self.candidates.append(a)


def _check_length(lam: np.ndarray, n: int) -> None:
    if lam.size != n:
        raise ShapeError(f"spectrum has {lam.size} entries, expected {n}")


def block_sum_spectrum(lam, num_blocks: int, block_size: int) -> np.ndarray:
    lam = sorted_desc(lam)
    _check_length(lam, num_blocks * block_size)
    return lam.reshape(num_blocks, block_size).sum(axis=1)


def single_trace_max(lam, shape: BipartiteShape, which: int) -> np.ndarray:
    """Majorant of the spectrum of ``tr_which`` over the orbit of ``diag(lam)``."""
    if which == 2:
        return block_sum_spectrum(lam, shape.d1, shape.d2)
    if which == 1:
        return block_sum_spectrum(lam, shape.d2, shape.d1)
    raise ShapeError(f"which must be 1 or 2, got {which}")


def single_trace_max_sv(sigma, shape: BipartiteShape, which: int) -> np.ndarray:
    """Weak majorant of the singular values of ``tr_which[U C V]``."""
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise DomainError("singular values must be nonnegative")
    return single_trace_max(s, shape, which)


def bell_min_marginal(trace: float, d: int) -> np.ndarray:
    if d < 2:
        raise ShapeError("d must be >= 2")
    return np.full(d, trace / d)


def joint_marginals_of_diagonal(c: DiagonalArrangement) -> JointMarginalSpectrum:
    B = c.blocks
    return JointMarginalSpectrum(first=B.sum(axis=0), second=B.sum(axis=1))


def joint_marginal_spectrum(C: np.ndarray, shape: BipartiteShape) -> JointMarginalSpectrum:
    """Eigenvalues of ``tr_1 C`` and ``tr_2 C``, each sorted decreasing."""
    return JointMarginalSpectrum(spectrum(partial_trace(C, shape, 1)), spectrum(partial_trace(C, shape, 2)))


def joint_singular_spectrum(C: np.ndarray, shape: BipartiteShape) -> JointMarginalSpectrum:
    return JointMarginalSpectrum(
        singular_values(partial_trace(C, shape, 1)), singular_values(partial_trace(C, shape, 2))
    )


def joint_envelope(lam, shape: BipartiteShape) -> np.ndarray:
    """Table ``E[k1, k2]`` bounding top-k1 of the first marginal plus top-k2 of the second."""
    lam = sorted_desc(lam)
    _check_length(lam, shape.total)
    prefix = np.concatenate([[0.0], np.cumsum(lam)])
    E = np.empty((shape.d2 + 1, shape.d1 + 1))
    for k1 in range(shape.d2 + 1):
        for k2 in range(shape.d1 + 1):
            once = k1 * shape.d1 + k2 * shape.d2 - k1 * k2
            E[k1, k2] = prefix[once] + prefix[k1 * k2]
    return E


def joint_envelope_lower(lam, shape: BipartiteShape) -> np.ndarray:
    """Table ``L[k1, k2]`` bounding bottom-k1 plus bottom-k2 marginal sums from below."""
    return -joint_envelope(-np.asarray(lam, dtype=float), shape)


def rank_of(lam, rtol: Optional[float] = None) -> int:
    lam = np.asarray(lam, dtype=float)
    if lam.size == 0:
        return 0
    rtol = load_tolerances().rank_rtol if rtol is None else rtol
    scale = float(np.abs(lam).max())
    return int(np.count_nonzero(np.abs(lam) > rtol * scale)) if scale > 0 else 0


def _tol(tol: Optional[float]) -> float:
    return load_tolerances().equality_atol if tol is None else float(tol)


def _flat(lam: np.ndarray, first: int, last: int, tol: float) -> bool:
    """``lam_first = ... = lam_last`` (1-based, inclusive) within ``tol * (1 + |lam_1|)``."""
    window = lam[first - 1:last]
    if window.size <= 1:
        return True
    return float(window.max() - window.min()) <= tol * (1.0 + abs(lam[0]))


def check_sufficient_square(lam, d: int, tol: Optional[float] = None) -> SufficiencyVerdict:
    lam = sorted_desc(lam)
    _check_length(lam, d * d)
    shape = BipartiteShape(d, d)
    verdict = SufficiencyVerdict()
    tol = _tol(tol)
    for n, case in enumerate(_SQUARE_WINDOWS, start=1):
        if _flat(lam, n, d * d - 4 + n, tol):
            verdict.add(case, DiagonalArrangement(lam, shape))
    return verdict


def check_sufficient_general(lam, shape: BipartiteShape, tol: Optional[float] = None) -> SufficiencyVerdict:
    if shape.d1 >= shape.d2:
        raise ShapeError(f"rectangular checker needs d1 < d2, got {shape}")
    lam = sorted_desc(lam)
    _check_length(lam, shape.total)
    tol = _tol(tol)
    verdict = SufficiencyVerdict()
    diag = DiagonalArrangement(lam, shape)
    if _flat(lam, 2, shape.total - 1, tol):
        verdict.add(SufficiencyCase.RECT_FLAT_INTERIOR, diag)
    # any sign pattern of at most three nonzero eigenvalues is covered
    if rank_of(lam) <= 3:
        verdict.add(SufficiencyCase.RECT_LOW_RANK, diag)
    return verdict


def swap_positions(c: DiagonalArrangement, i: int, j: int) -> DiagonalArrangement:
    vals = c.values.copy()
    vals[[i - 1, j - 1]] = vals[[j - 1, i - 1]]
    return DiagonalArrangement(vals, c.shape)


def _require_nonnegative(lam: np.ndarray) -> None:
    if lam.size and lam[-1] < -load_tolerances().psd_atol * max(1.0, abs(lam[0])):
        raise DomainError("spectrum must be nonnegative")


def characterize_2xd(lam, d: int, tol: Optional[float] = None) -> SufficiencyVerdict:
    """All applicable cases of the qubit-qudit characterization.

    An empty verdict means no diagonal arrangement majorizes the orbit.
    """
    if d <= 2:
        raise PreconditionError("qubit-qudit characterization needs d > 2")
    lam = sorted_desc(lam)
    _check_length(lam, 2 * d)
    _require_nonnegative(lam)
    tol = _tol(tol)
    shape = BipartiteShape(2, d)
    diag = DiagonalArrangement(lam, shape)
    r = rank_of(lam)
    full = r in (2 * d - 1, 2 * d)
    verdict = SufficiencyVerdict()

    if r <= 3:
        verdict.add(SufficiencyCase.TWO_BY_D_LOW_RANK, diag)
    if full and _flat(lam, 2, 2 * d - 1, tol):
        verdict.add(SufficiencyCase.TWO_BY_D_FLAT_INTERIOR, diag)
    if full and _flat(lam, 3, 2 * d - 1, tol):
        threshold = 2 * (d - 2) * lam[2] + lam[2 * d - 1]
        if lam[1] >= threshold - tol * (1.0 + abs(lam[0])):
            verdict.add(SufficiencyCase.TWO_BY_D_DOMINANT_SECOND, diag, swap_positions(diag, 2, d + 1))
    if d == 3 and r == 5 and _flat(lam, 3, 5, tol):
        verdict.add(SufficiencyCase.TWO_BY_D_QUTRIT_RANK_FIVE, diag)
    return verdict


def _flip_arrangement(c: DiagonalArrangement) -> DiagonalArrangement:
    return DiagonalArrangement(c.blocks.T.ravel(), c.shape.swapped())


def certify_spectrum(lam, shape: BipartiteShape, tol: Optional[float] = None) -> SufficiencyVerdict:
    """Run every eigenvalue sufficiency checker that applies to ``shape``.

    For ``d1 > d2`` the checks run on the swapped shape and the candidates
    are mapped back, which leaves every joint spectrum unchanged.
    """
    lam = sorted_desc(lam)
    if shape.d1 > shape.d2:
        inner = certify_spectrum(lam, shape.swapped(), tol)
        return SufficiencyVerdict(inner.applicable_cases, [_flip_arrangement(c) for c in inner.candidates])
    if shape.is_square:
        return check_sufficient_square(lam, shape.d1, tol)
    verdict = check_sufficient_general(lam, shape, tol)
    if shape.d1 == 2 and shape.d2 > 2 and lam[-1] >= -load_tolerances().psd_atol * max(1.0, abs(lam[0])):
        extra = characterize_2xd(lam, shape.d2, tol)
        for case in sorted(extra.applicable_cases, key=lambda c: c.value):
            verdict.add(case, *extra.candidates)
    return verdict


def check_sufficient_singular(sigma, shape: BipartiteShape, tol: Optional[float] = None) -> SufficiencyVerdict:
    """Singular-value analogue: certifies weak majorization of the joint singular spectrum."""
    s = sorted_desc(sigma)
    _check_length(s, shape.total)
    if s.size and s[-1] < 0:
        raise DomainError("singular values must be nonnegative")
    if shape.d1 > shape.d2:
        inner = check_sufficient_singular(s, shape.swapped(), tol)
        return SufficiencyVerdict(inner.applicable_cases, [_flip_arrangement(c) for c in inner.candidates], weak=True)
    tol = _tol(tol)
    diag = DiagonalArrangement(s, shape)
    verdict = SufficiencyVerdict(weak=True)
    n = shape.total
    if shape.is_square and any(_flat(s, k, n - 4 + k, tol) for k in range(1, 5)):
        verdict.add(SufficiencyCase.SV_SQUARE_WINDOW, diag)
    if not shape.is_square and _flat(s, 2, n - 1, tol):
        verdict.add(SufficiencyCase.SV_FLAT_INTERIOR, diag)
    if rank_of(s) <= 3:
        verdict.add(SufficiencyCase.SV_LOW_RANK, diag)
    return verdict


def necessary_rank_filter(d: int, r: int) -> RankVerdict:
    """Classify rank ``r`` for spectra whose nonzero eigenvalues are all equal (square case)."""
    if d < 3:
        raise DomainError("rank filter needs d >= 3")
    if not 1 <= r <= d * d:
        raise DomainError(f"rank {r} outside 1..{d * d}")
    if r <= 3 or r >= d * d - 3:
        return RankVerdict.POSSIBLE
    if d < 24 and r % d == 0 and 2 <= r // d <= d - 2:
        return RankVerdict.UNRESOLVED
    return RankVerdict.IMPOSSIBLE


def nqubit_bound_vector(lam, n: Optional[int] = None) -> np.ndarray:
    """Majorant of the concatenated one-qubit marginal spectra.

    Pairs ``(L1_j, L2_j)`` for j = 1..n, where ``L1_j`` sums the sorted
    eigenvalues whose big-endian binary label has bit j equal to 0.
    """
    lam = sorted_desc(lam)
    if n is None:
        n = int(round(math.log2(lam.size))) if lam.size else 0
    if n < 1 or lam.size != 2 ** n:
        raise ShapeError(f"spectrum length {lam.size} is not 2**n")
    labels = np.arange(lam.size)
    total = lam.sum()
    out = []
    for j in range(1, n + 1):
        zero_bit = ((labels >> (n - j)) & 1) == 0
        top = lam[zero_bit].sum()
        out.extend([top, total - top])
    return np.array(out)


def canonical_block_sort(c: DiagonalArrangement) -> DiagonalArrangement:
    """Sort every block decreasingly; the result dominates the input's joint spectrum."""
    return DiagonalArrangement(-np.sort(-c.blocks, axis=1), c.shape)


def operator_majorant(shape: BipartiteShape, k1: int, k2: int) -> np.ndarray:
    """Weak majorant of the singular values of ``sum_i W_i (x) P_i + sum_j Q_j (x) V_j``.

    ``P_i`` (i <= k1) and ``Q_j`` (j <= k2) are coordinate projectors on the
    second and first factor; ``W_i``, ``V_j`` are arbitrary unitaries.
    """
    if not (0 <= k1 <= shape.d2 and 0 <= k2 <= shape.d1):
        raise ShapeError(f"(k1, k2)=({k1}, {k2}) outside shape {shape}")
    rows = (np.arange(shape.d1) < k2).astype(float)
    cols = (np.arange(shape.d2) < k1).astype(float)
    return sorted_desc(np.add.outer(rows, cols))


def bell_state_bounds(lam, d: int, f: FunctionalId) -> Tuple[float, float]:
    """Sharp ``(lower, upper)`` values of ``f(spectrum of tr_2 rho)`` over the orbit of a PSD ``diag(lam)``."""
    lam = sorted_desc(lam)
    _check_length(lam, d * d)
    _require_nonnegative(lam)
    flat = evaluate(f, bell_min_marginal(lam.sum(), d))
    block = evaluate(f, single_trace_max(lam, BipartiteShape(d, d), 2))
    return (flat, block) if f.is_convex else (block, flat)


def determinant_sum_bound(d: int) -> float:
    """Upper bound on ``det(tr_1 rho) + det(tr_2 rho)`` for a state on d x d."""
    if d < 2:
        raise ShapeError("d must be >= 2")
    return 2.0 / d ** d

