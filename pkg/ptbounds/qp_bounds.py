"""Small quadratic programs that produce certifiable majorants.

Each program looks for the flattest vector ``mu`` (least ``||mu||_2^2``)
that majorizes the spectrum and has one of the eigenvalue patterns a
sufficiency checker recognises. Variables are the distinct values of
``mu``; ``multiplicities`` says how often each one repeats, so the
objective and the trace equality share the same coefficients.

The programs have at most four variables, which lets :func:`solve_qp`
enumerate active sets exactly instead of iterating.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ptbounds.bipartite_core import BipartiteShape
from ptbounds.config import load_tolerances
from ptbounds.errors import DomainError, NumericalError, PreconditionError, ShapeError, UncertifiableError
from ptbounds.functionals import FunctionalId, evaluate
from ptbounds.majorization import sorted_desc
from ptbounds.spectral_bounds import (
    SufficiencyVerdict,
    certify_spectrum,
    check_sufficient_singular,
    joint_marginals_of_diagonal,
)

logger = logging.getLogger(__name__)


class QpType(str, Enum):
    TYPE_1 = "1"
    TYPE_2 = "2"
    TYPE_3 = "3"
    TYPE_4 = "4"
    RECT = "rect"


SQUARE_TYPES = (QpType.TYPE_1, QpType.TYPE_2, QpType.TYPE_3, QpType.TYPE_4)


class QpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


class QpModel(BaseModel):
    """``min x^T diag(objective_diag) x`` subject to order, majorization and trace rows.

    ``maj_rows @ x >= maj_rhs`` encodes the prefix-sum inequalities;
    ``order_rows @ x <= 0`` keeps the variables decreasing.
    """

    qp_type: QpType
    shape: Tuple[int, int]
    multiplicities: List[int]
    objective_diag: List[float]
    order_rows: List[List[float]]
    maj_rows: List[List[float]]
    maj_rhs: List[float]
    eq_coeffs: List[float]
    eq_rhs: float
    eq_kind: Literal["eq", "ge"] = Field("eq", description="'ge' relaxes the trace equality to a one-norm floor")
    positivity: bool = False

    @property
    def variable_count(self) -> int:
        return len(self.multiplicities)

    @property
    def singular(self) -> bool:
        return self.eq_kind == "ge"

    def inequality_system(self) -> Tuple[np.ndarray, np.ndarray]:
        """All inequality rows as ``G x <= h`` with duplicate rows removed."""
        n = self.variable_count
        rows: List[np.ndarray] = [np.asarray(r, dtype=float) for r in self.order_rows]
        rhs: List[float] = [0.0] * len(self.order_rows)
        rows += [-np.asarray(r, dtype=float) for r in self.maj_rows]
        rhs += [-float(s) for s in self.maj_rhs]
        if self.positivity:
            rows += list(-np.eye(n))
            rhs += [0.0] * n
        if self.singular:
            rows.append(-np.asarray(self.eq_coeffs, dtype=float))
            rhs.append(-self.eq_rhs)
        seen = {}
        for row, b in zip(rows, rhs):
            key = tuple(row.tolist())
            seen[key] = min(b, seen.get(key, np.inf))
        G = np.array([list(k) for k in seen]) if seen else np.zeros((0, n))
        h = np.array(list(seen.values()))
        return G, h

    def equality_system(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.singular:
            return np.zeros((0, self.variable_count)), np.zeros(0)
        return np.array([self.eq_coeffs], dtype=float), np.array([self.eq_rhs])


class QpSolution(BaseModel):
    status: QpStatus
    x: List[float] = Field(default_factory=list)
    objective: Optional[float] = None
    active_set: List[int] = Field(default_factory=list, description="Indices into the deduplicated inequality rows")
    kkt_residual: float = 0.0


_MULTIPLICITIES = {
    QpType.TYPE_1: lambda n: [1, 1, 1, n - 3],
    QpType.TYPE_2: lambda n: [1, 1, n - 3, 1],
    QpType.TYPE_3: lambda n: [1, n - 3, 1, 1],
    QpType.TYPE_4: lambda n: [n - 3, 1, 1, 1],
    QpType.RECT: lambda n: [1, n - 2, 1],
}


def _order_rows(n_vars: int) -> List[List[float]]:
    rows = []
    for t in range(n_vars - 1):
        row = [0.0] * n_vars
        row[t], row[t + 1] = -1.0, 1.0
        rows.append(row)
    return rows


def _maj_rows(mult: Sequence[int]) -> List[List[float]]:
    # row k counts how many of the first k expanded entries each variable supplies
    starts = np.concatenate([[0], np.cumsum(mult)[:-1]])
    total = int(np.sum(mult))
    return [np.clip(k - starts, 0, mult).astype(float).tolist() for k in range(1, total)]


def _model(
    qp_type: QpType, lam: np.ndarray, shape: BipartiteShape, positivity: bool
) -> QpModel:
    mult = _MULTIPLICITIES[qp_type](lam.size)
    return QpModel(
        qp_type=qp_type,
        shape=(shape.d1, shape.d2),
        multiplicities=mult,
        objective_diag=[float(m) for m in mult],
        order_rows=_order_rows(len(mult)),
        maj_rows=_maj_rows(mult),
        maj_rhs=np.cumsum(lam)[:-1].tolist(),
        eq_coeffs=[float(m) for m in mult],
        eq_rhs=float(lam.sum()),
        positivity=positivity,
    )


def build_qp_square(lam, qp_type: QpType, d: int, positivity: bool = False) -> QpModel:
    qp_type = QpType(qp_type)
    if qp_type is QpType.RECT:
        raise ShapeError("use build_qp_rect for the rectangular program")
    lam = sorted_desc(lam)
    shape = BipartiteShape(d, d)
    if lam.size != shape.total:
        raise ShapeError(f"spectrum has {lam.size} entries, expected {shape.total}")
    return _model(qp_type, lam, shape, positivity)


def build_qp_rect(lam, shape: BipartiteShape, positivity: bool = False) -> QpModel:
    if shape.d1 >= shape.d2:
        raise ShapeError(f"rectangular program needs d1 < d2, got {shape}")
    lam = sorted_desc(lam)
    if lam.size != shape.total:
        raise ShapeError(f"spectrum has {lam.size} entries, expected {shape.total}")
    return _model(QpType.RECT, lam, shape, positivity)


def build_qp_singular(sigma, shape: BipartiteShape, qp_type: QpType) -> QpModel:
    """Singular-value program: positivity is forced and the trace row becomes ``b_eq^T x >= ||sigma||_1``."""
    s = sorted_desc(sigma)
    if s.size and s[-1] < 0:
        raise DomainError("singular values must be nonnegative")
    qp_type = QpType(qp_type)
    if qp_type is QpType.RECT:
        base = build_qp_rect(s, shape)
    else:
        if not shape.is_square:
            raise ShapeError(f"program type {qp_type.value} needs a square shape, got {shape}")
        base = build_qp_square(s, qp_type, shape.d1)
    return base.model_copy(update={"eq_kind": "ge", "positivity": True, "eq_rhs": float(np.abs(s).sum())})


@dataclass
class _Systems:
    A: np.ndarray
    G: np.ndarray
    h: np.ndarray
    E: np.ndarray
    e: np.ndarray

    @property
    def slack(self) -> float:
        scale = max(1.0, float(np.abs(self.h).max(initial=0.0)), float(np.abs(self.e).max(initial=0.0)))
        return load_tolerances().kkt_atol * scale

    def violation(self, x: np.ndarray) -> float:
        ineq = float(np.max(self.G @ x - self.h, initial=0.0))
        eq = float(np.max(np.abs(self.E @ x - self.e), initial=0.0))
        return max(ineq, eq, 0.0)


def _independent(M: np.ndarray) -> bool:
    return M.shape[0] == 0 or np.linalg.matrix_rank(M) == M.shape[0]


def _kkt_point(sys: _Systems, active: Tuple[int, ...]) -> Optional[QpSolution]:
    n, m_eq, k = sys.A.shape[0], sys.E.shape[0], len(active)
    GW = sys.G[list(active)]
    if not _independent(np.vstack([sys.E, GW])):
        return None
    K = np.zeros((n + m_eq + k, n + m_eq + k))
    K[:n, :n] = 2 * sys.A
    K[:n, n:n + m_eq] = sys.E.T
    K[:n, n + m_eq:] = GW.T
    K[n:n + m_eq, :n] = sys.E
    K[n + m_eq:, :n] = GW
    rhs = np.concatenate([np.zeros(n), sys.e, sys.h[list(active)]])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None
    x, nu, mu = sol[:n], sol[n:n + m_eq], sol[n + m_eq:]
    slack = sys.slack
    if sys.violation(x) > slack or np.any(mu < -slack):
        return None
    stationarity = float(np.max(np.abs(2 * sys.A @ x + sys.E.T @ nu + GW.T @ mu), initial=0.0))
    complementarity = float(np.max(np.abs(mu * (GW @ x - sys.h[list(active)])), initial=0.0))
    residual = max(stationarity, sys.violation(x), float(np.max(-mu, initial=0.0)), complementarity)
    return QpSolution(
        status=QpStatus.OPTIMAL,
        x=x.tolist(),
        objective=float(x @ sys.A @ x),
        active_set=list(active),
        kkt_residual=residual,
    )


def _enumerate(sys: _Systems) -> Optional[QpSolution]:
    n, m_eq, rows = sys.A.shape[0], sys.E.shape[0], sys.G.shape[0]
    for size in range(0, n - m_eq + 1):
        for active in combinations(range(rows), size):
            point = _kkt_point(sys, active)
            if point is not None:
                return point
    return None


def _has_feasible_vertex(sys: _Systems) -> bool:
    n, m_eq, rows = sys.A.shape[0], sys.E.shape[0], sys.G.shape[0]
    for active in combinations(range(rows), n - m_eq):
        M = np.vstack([sys.E, sys.G[list(active)]])
        if np.linalg.matrix_rank(M) < n:
            continue
        x = np.linalg.solve(M, np.concatenate([sys.e, sys.h[list(active)]]))
        if sys.violation(x) <= sys.slack:
            return True
    return False


def solve_qp(model: QpModel) -> QpSolution:
    """Exact solution by enumerating active sets in order of size, then index.

    The objective is strictly convex, so the first KKT point found is the
    optimum. When none exists the polytope's vertices are enumerated to
    confirm infeasibility.
    """
    G, h = model.inequality_system()
    E, e = model.equality_system()
    sys = _Systems(np.diag(model.objective_diag), G, h, E, e)
    found = _enumerate(sys)
    if found is not None:
        logger.debug("type %s solved with active set %s", model.qp_type.value, found.active_set)
        return found
    if not _has_feasible_vertex(sys):
        logger.info("type %s program is infeasible", model.qp_type.value)
        return QpSolution(status=QpStatus.INFEASIBLE)
    logger.warning("type %s: feasible but no KKT point found, retrying with perturbed bounds", model.qp_type.value)
    found = _enumerate(_Systems(sys.A, G, h + 1e-12, E, e))
    if found is None:
        cond = float(np.linalg.cond(np.vstack([G, E]))) if G.size else float("nan")
        raise NumericalError(f"type {model.qp_type.value} program is degenerate (constraint condition {cond:.3g})")
    return found


def expand_mu(solution: QpSolution, model: QpModel) -> np.ndarray:
    if solution.status is not QpStatus.OPTIMAL:
        raise PreconditionError(f"type {model.qp_type.value} program has no solution to expand")
    return np.repeat(np.asarray(solution.x, dtype=float), model.multiplicities)


def qp_bound(f: FunctionalId, mu, shape: BipartiteShape, verdict: SufficiencyVerdict) -> float:
    """Uniform bound on ``f`` of the joint marginal spectrum over the orbit of any C with spectrum below ``mu``.

    Upper bound (max over candidates) for Schur-convex ``f``, lower bound
    (min) for Schur-concave ``f``.
    """
    if not verdict:
        raise UncertifiableError("the majorant fits no sufficiency case")
    if verdict.weak and not f.increasing_schur_convex:
        raise UncertifiableError(f"{f} is not increasing Schur-convex; a weak majorant cannot bound it")
    values = [evaluate(f, joint_marginals_of_diagonal(c).vector) for c in verdict.candidates]
    return max(values) if f.is_convex else min(values)


@dataclass
class QpBoundResult:
    value: float
    qp_type: QpType
    mu: np.ndarray
    model: QpModel
    solution: QpSolution
    verdict: SufficiencyVerdict


def applicable_types(shape: BipartiteShape) -> List[QpType]:
    return list(SQUARE_TYPES) if shape.is_square else [QpType.RECT]


def solve_type(
    lam, shape: BipartiteShape, qp_type: QpType, positivity: bool = False, singular: bool = False
) -> Tuple[QpModel, QpSolution]:
    qp_type = QpType(qp_type)
    rect_shape = shape if shape.d1 < shape.d2 else shape.swapped()
    if singular:
        model = build_qp_singular(lam, rect_shape if qp_type is QpType.RECT else shape, qp_type)
    elif qp_type is QpType.RECT:
        model = build_qp_rect(lam, rect_shape, positivity)
    else:
        if not shape.is_square:
            raise ShapeError(f"program type {qp_type.value} needs a square shape, got {shape}")
        model = build_qp_square(lam, qp_type, shape.d1, positivity)
    return model, solve_qp(model)


def best_qp_bound(
    f: FunctionalId,
    lam,
    shape: BipartiteShape,
    positivity: Optional[bool] = None,
    types: Optional[Sequence[QpType]] = None,
    singular: bool = False,
) -> QpBoundResult:
    """Solve every applicable program and keep the tightest certified bound."""
    if positivity is None:
        positivity = f.needs_nonnegative
    best: Optional[QpBoundResult] = None
    for qp_type in types or applicable_types(shape):
        model, solution = solve_type(lam, shape, qp_type, positivity, singular)
        if solution.status is not QpStatus.OPTIMAL:
            continue
        mu = expand_mu(solution, model)
        verdict = check_sufficient_singular(mu, shape) if singular else certify_spectrum(mu, shape)
        if not verdict:
            logger.warning("type %s majorant fits no sufficiency case; skipped", qp_type.value)
            continue
        try:
            value = qp_bound(f, mu, shape, verdict)
        except DomainError as e:
            logger.info("type %s skipped for %s: %s", qp_type.value, f, e)
            continue
        logger.info("type %s bound for %s: %.10g", qp_type.value, f, value)
        better = best is None or (value < best.value if f.is_convex else value > best.value)
        if better:
            best = QpBoundResult(value, qp_type, mu, model, solution, verdict)
    if best is None:
        raise UncertifiableError(f"no program certifies a bound for {f} on shape {shape}")
    return best
