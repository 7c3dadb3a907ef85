"""Schur-convex and Schur-concave spectral functionals.

A functional is identified by a :class:`FunctionalId`, which has a
canonical string form used on the command line: ``schatten:2``,
``powsum:2``, ``kyfan:3``, ``opnorm``, ``min``, ``vn``, ``renyi:5``,
``det`` and ``neg:<inner>``. Entropies use the natural logarithm with
``0 ln 0 = 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import entr

from ptbounds.bipartite_core import BipartiteShape, check_hermitian, partial_trace, spectrum
from ptbounds.config import load_tolerances
from ptbounds.errors import DomainError

logger = logging.getLogger(__name__)


class FunctionalKind(str, Enum):
    SCHATTEN = "schatten"
    POWER_SUM = "powsum"
    KY_FAN = "kyfan"
    OP_NORM = "opnorm"
    MIN_VALUE = "min"
    VN_ENTROPY = "vn"
    RENYI = "renyi"
    DETERMINANT = "det"
    NEG = "neg"


class Direction(str, Enum):
    SCHUR_CONVEX = "schur_convex"
    SCHUR_CONCAVE = "schur_concave"

    def flipped(self) -> "Direction":
        return Direction.SCHUR_CONCAVE if self is Direction.SCHUR_CONVEX else Direction.SCHUR_CONVEX


_PARAMETRIC = {FunctionalKind.SCHATTEN, FunctionalKind.POWER_SUM, FunctionalKind.KY_FAN, FunctionalKind.RENYI}


@dataclass(frozen=True)
class FunctionalId:
    kind: FunctionalKind
    param: Optional[float] = None
    inner: Optional["FunctionalId"] = None

    def __post_init__(self) -> None:
        if self.kind in _PARAMETRIC and self.param is None:
            raise DomainError(f"{self.kind.value} needs a parameter")
        if self.kind in (FunctionalKind.SCHATTEN, FunctionalKind.POWER_SUM) and not self.param > 0:
            raise DomainError(f"{self.kind.value} needs p > 0, got {self.param}")
        if self.kind is FunctionalKind.KY_FAN and (self.param < 1 or int(self.param) != self.param):
            raise DomainError(f"kyfan needs a positive integer k, got {self.param}")
        if self.kind is FunctionalKind.RENYI and (self.param <= 0 or self.param == 1):
            raise DomainError(f"renyi needs alpha in (0,1) or (1,inf), got {self.param}")
        if self.kind is FunctionalKind.NEG and self.inner is None:
            raise DomainError("neg needs an inner functional")

    @classmethod
    def parse(cls, text: str) -> "FunctionalId":
        text = text.strip().lower()
        head, _, rest = text.partition(":")
        try:
            kind = FunctionalKind(head)
        except ValueError as e:
            raise DomainError(f"unknown functional {text!r}") from e
        if kind is FunctionalKind.NEG:
            return cls(kind, inner=cls.parse(rest))
        if kind in _PARAMETRIC:
            if not rest:
                raise DomainError(f"{head} needs a parameter, e.g. {head}:2")
            try:
                return cls(kind, float(rest))
            except ValueError as e:
                raise DomainError(f"bad parameter in {text!r}") from e
        if rest:
            raise DomainError(f"{head} takes no parameter")
        return cls(kind)

    def __str__(self) -> str:
        if self.kind is FunctionalKind.NEG:
            return f"neg:{self.inner}"
        if self.param is not None:
            return f"{self.kind.value}:{self.param:g}"
        return self.kind.value

    @property
    def direction(self) -> Direction:
        if self.kind is FunctionalKind.NEG:
            return self.inner.direction.flipped()
        if self.kind in (FunctionalKind.SCHATTEN, FunctionalKind.POWER_SUM):
            return Direction.SCHUR_CONVEX if self.param >= 1 else Direction.SCHUR_CONCAVE
        if self.kind in (FunctionalKind.KY_FAN, FunctionalKind.OP_NORM):
            return Direction.SCHUR_CONVEX
        return Direction.SCHUR_CONCAVE

    @property
    def is_convex(self) -> bool:
        return self.direction is Direction.SCHUR_CONVEX

    @property
    def needs_nonnegative(self) -> bool:
        if self.kind is FunctionalKind.NEG:
            return self.inner.needs_nonnegative
        if self.kind in (FunctionalKind.VN_ENTROPY, FunctionalKind.RENYI, FunctionalKind.DETERMINANT):
            return True
        return self.kind in (FunctionalKind.SCHATTEN, FunctionalKind.POWER_SUM) and self.param < 1

    @property
    def increasing_schur_convex(self) -> bool:
        """Usable with a weak-majorization certificate on nonnegative vectors."""
        return self.is_convex and self.kind is not FunctionalKind.NEG


def _nonnegative(v: np.ndarray, f: FunctionalId) -> np.ndarray:
    floor = -load_tolerances().psd_atol * max(1.0, float(np.abs(v).max(initial=0.0)))
    if np.any(v < floor):
        raise DomainError(f"{f} requires a nonnegative vector, min entry {v.min():.3g}")
    return np.clip(v, 0.0, None)


def evaluate(f: FunctionalId, v) -> float:
    x = np.asarray(v, dtype=float).ravel()
    if f.kind is FunctionalKind.NEG:
        return -evaluate(f.inner, x)
    if f.needs_nonnegative:
        x = _nonnegative(x, f)
    a = np.abs(x)
    if f.kind is FunctionalKind.SCHATTEN:
        return float(np.sum(a ** f.param) ** (1.0 / f.param))
    if f.kind is FunctionalKind.POWER_SUM:
        return float(np.sum(a ** f.param))
    if f.kind is FunctionalKind.KY_FAN:
        k = int(f.param)
        if k > x.size:
            raise DomainError(f"kyfan:{k} on a vector of length {x.size}")
        return float(np.sort(a)[::-1][:k].sum())
    if f.kind is FunctionalKind.OP_NORM:
        return float(a.max())
    if f.kind is FunctionalKind.MIN_VALUE:
        return float(x.min())
    if f.kind is FunctionalKind.VN_ENTROPY:
        return float(entr(x).sum())
    if f.kind is FunctionalKind.RENYI:
        total = float(np.sum(x ** f.param))
        if total <= 0:
            raise DomainError("renyi entropy of the zero vector")
        return float(np.log(total) / (1.0 - f.param))
    if f.kind is FunctionalKind.DETERMINANT:
        return float(np.prod(x))
    raise DomainError(f"unhandled functional {f}")


def validate_state(C: np.ndarray) -> np.ndarray:
    """Hermitian, PSD and unit-trace within tolerance; returns the spectrum."""
    tol = load_tolerances()
    lam = spectrum(check_hermitian(C))
    if lam.min(initial=0.0) < -tol.psd_atol:
        raise DomainError(f"not positive semidefinite (min eigenvalue {lam.min():.3g})")
    if abs(lam.sum() - 1.0) > tol.psd_atol:
        raise DomainError(f"trace {lam.sum():.12g} is not 1")
    return np.clip(lam, 0.0, None)


VN = FunctionalId(FunctionalKind.VN_ENTROPY)


def mutual_information(C: np.ndarray, shape: BipartiteShape) -> float:
    lam = validate_state(C)
    s_joint = evaluate(VN, lam)
    s_first = evaluate(VN, np.clip(spectrum(partial_trace(C, shape, 2)), 0.0, None))
    s_second = evaluate(VN, np.clip(spectrum(partial_trace(C, shape, 1)), 0.0, None))
    return s_first + s_second - s_joint
