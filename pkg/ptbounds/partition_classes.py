"""Canonical classes of diagonal arrangements.

Two arrangements of the same spectrum are in one class when they share
their blocks as multisets, up to a permutation of the blocks. Sorting
every block decreasingly gives a representative whose joint marginal
spectrum majorizes that of every class member, so a majorization search
over all of ``S_{d1 d2}`` only needs one representative per class.

Blocks are count vectors over the distinct eigenvalues; a class is a
multiset of ``d1`` such vectors, each summing to ``d2``. Listing the
vectors in non-increasing lexicographic order enumerates every class
exactly once.
"""
from __future__ import annotations

import logging
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ptbounds.bipartite_core import BipartiteShape
from ptbounds.config import load_tolerances
from ptbounds.errors import CombinatorialGuardError, ShapeError
from ptbounds.majorization import sorted_desc
from ptbounds.spectral_bounds import DiagonalArrangement

logger = logging.getLogger(__name__)

CountVector = Tuple[int, ...]


def group_values(lam, tol: Optional[float] = None) -> Tuple[np.ndarray, List[int]]:
    """Distinct values of a spectrum (decreasing) and their multiplicities.

    Entries within ``tol * (1 + |lam_1|)`` of a group's first entry join it.
    """
    lam = sorted_desc(lam)
    tol = load_tolerances().equality_atol if tol is None else float(tol)
    if lam.size == 0:
        return lam, []
    slack = tol * (1.0 + abs(lam[0]))
    values: List[float] = [float(lam[0])]
    counts: List[int] = [1]
    for v in lam[1:]:
        if values[-1] - v <= slack:
            counts[-1] += 1
        else:
            values.append(float(v))
            counts.append(1)
    return np.array(values), counts


def _compositions(total: int, caps: Sequence[int]) -> Iterator[CountVector]:
    # count vectors summing to total, bounded by caps, in decreasing lex order
    if not caps:
        if total == 0:
            yield ()
        return
    tail = sum(caps[1:])
    for first in range(min(caps[0], total), max(0, total - tail) - 1, -1):
        for rest in _compositions(total - first, caps[1:]):
            yield (first,) + rest


def _block_multisets(
    remaining: CountVector, blocks_left: int, block_size: int, upper: Optional[CountVector]
) -> Iterator[Tuple[CountVector, ...]]:
    if blocks_left == 0:
        if not any(remaining):
            yield ()
        return
    for block in _compositions(block_size, remaining):
        if upper is not None and block > upper:
            continue
        rest = tuple(r - b for r, b in zip(remaining, block))
        for tail in _block_multisets(rest, blocks_left - 1, block_size, block):
            yield (block,) + tail


def iter_canonical_classes(
    lam, shape: BipartiteShape, guard: Optional[int] = None, tol: Optional[float] = None
) -> Iterator[DiagonalArrangement]:
    """Yield one block-sorted representative per class.

    Raises CombinatorialGuardError once more than ``guard`` classes have
    been produced.
    """
    values, counts = group_values(lam, tol)
    if sum(counts) != shape.total:
        raise ShapeError(f"spectrum has {sum(counts)} entries, expected {shape.total}")
    guard = load_tolerances().class_guard if guard is None else int(guard)
    produced = 0
    for blocks in _block_multisets(tuple(counts), shape.d1, shape.d2, None):
        produced += 1
        if produced > guard:
            raise CombinatorialGuardError(
                f"more than {guard} canonical classes for shape {shape}; raise PTBOUNDS_CLASS_GUARD to continue"
            )
        diag = np.concatenate([np.repeat(values, block) for block in blocks])
        yield DiagonalArrangement(diag, shape)
    logger.debug("enumerated %d canonical classes for shape %s", produced, shape)


def count_canonical_classes(lam, shape: BipartiteShape, guard: Optional[int] = None) -> int:
    return sum(1 for _ in iter_canonical_classes(lam, shape, guard))
