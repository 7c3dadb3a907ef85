"""Implementations behind the ``bound``, ``witness`` and ``qp`` subcommands."""
from __future__ import annotations

import logging
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from ptbounds.bipartite_core import (
    BipartiteShape,
    SeedLike,
    as_rng,
    haar_unitary,
    nqubit_partial_trace,
    orbit_sample,
    partial_trace,
    singular_values,
    spectrum,
)
from ptbounds.counterexample_forge import WitnessFamily, WitnessReport, build_witness
from ptbounds.errors import DomainError, NumericalError, PreconditionError, ShapeError, UncertifiableError
from ptbounds.functionals import FunctionalId, evaluate
from ptbounds.harness.documents import BoundReport, QpEntry, QpReport, SpectrumDocument
from ptbounds.majorization import sorted_desc
from ptbounds.qp_bounds import (
    QpStatus,
    QpType,
    applicable_types,
    best_qp_bound,
    expand_mu,
    solve_type,
)
from ptbounds.spectral_bounds import (
    SufficiencyVerdict,
    certify_spectrum,
    check_sufficient_singular,
    joint_marginal_spectrum,
    joint_marginals_of_diagonal,
    joint_singular_spectrum,
    nqubit_bound_vector,
    single_trace_max,
    single_trace_max_sv,
)

logger = logging.getLogger(__name__)


class BoundMode(str, Enum):
    SINGLE1 = "single1"
    SINGLE2 = "single2"
    JOINT = "joint"
    QP = "qp"
    NQUBIT = "nqubit"


def _direction(f: FunctionalId) -> str:
    return "upper" if f.is_convex else "lower"


def _extreme_candidate(f: FunctionalId, verdict: SufficiencyVerdict) -> Tuple[float, np.ndarray]:
    if verdict.weak and not f.increasing_schur_convex:
        raise UncertifiableError(f"{f} is not increasing Schur-convex; a weak majorant cannot bound it")
    scored = [(evaluate(f, joint_marginals_of_diagonal(c).vector), c) for c in verdict.candidates]
    value, best = (max if f.is_convex else min)(scored, key=lambda t: t[0])
    return value, sorted_desc(joint_marginals_of_diagonal(best).vector)


def _sample(doc: SpectrumDocument, rng: np.random.Generator) -> np.ndarray:
    lam = doc.values
    if doc.singular:
        n = lam.size
        return haar_unitary(n, rng) @ np.diag(lam).astype(complex) @ haar_unitary(n, rng)
    return orbit_sample(lam, rng)


def _observed(doc: SpectrumDocument, mode: BoundMode, C: np.ndarray) -> np.ndarray:
    if mode is BoundMode.NQUBIT:
        n = doc.n_qubits
        return np.concatenate([spectrum(nqubit_partial_trace(C, n, j)) for j in range(1, n + 1)])
    shape = doc.bipartite_shape
    measure = singular_values if doc.singular else spectrum
    if mode is BoundMode.SINGLE1:
        return measure(partial_trace(C, shape, 1))
    if mode is BoundMode.SINGLE2:
        return measure(partial_trace(C, shape, 2))
    joint = joint_singular_spectrum(C, shape) if doc.singular else joint_marginal_spectrum(C, shape)
    return joint.vector


def _sanity_check(doc: SpectrumDocument, f: FunctionalId, mode: BoundMode, bound: float, seed: SeedLike) -> float:
    value = evaluate(f, _observed(doc, mode, _sample(doc, as_rng(seed))))
    slack = 1e-7 * max(1.0, abs(bound))
    if (f.is_convex and value > bound + slack) or (not f.is_convex and value < bound - slack):
        raise NumericalError(f"sanity sample {value:.12g} violates the {_direction(f)} bound {bound:.12g}")
    return value


def _single(doc: SpectrumDocument, f: FunctionalId, which: int) -> Tuple[float, np.ndarray, str]:
    shape = doc.bipartite_shape
    if doc.singular:
        if not f.increasing_schur_convex:
            raise UncertifiableError(f"{f} is not increasing Schur-convex; singular values give a weak majorant only")
        majorant = single_trace_max_sv(doc.values, shape, which)
        return evaluate(f, majorant), majorant, "singular-single-trace"
    majorant = single_trace_max(doc.values, shape, which)
    return evaluate(f, majorant), majorant, "single-trace"


def _qp_types(shape: BipartiteShape, qp_type: Optional[str]) -> List[QpType]:
    if qp_type in (None, "auto"):
        return applicable_types(shape)
    try:
        return [QpType(qp_type)]
    except ValueError as e:
        raise DomainError(f"unknown program type {qp_type!r}; use 1, 2, 3, 4, rect or auto") from e


def _qp(
    doc: SpectrumDocument, f: FunctionalId, qp_type: Optional[str]
) -> Tuple[float, np.ndarray, str, str]:
    shape = doc.bipartite_shape
    result = best_qp_bound(f, doc.values, shape, types=_qp_types(shape, qp_type), singular=doc.singular)
    cases = ",".join(sorted(c.value for c in result.verdict.applicable_cases))
    return result.value, result.mu, f"qp-type-{result.qp_type.value}:{cases}", result.qp_type.value


def cmd_bound(
    doc: SpectrumDocument,
    functional: str,
    mode: BoundMode,
    qp_type: Optional[str] = "auto",
    seed: SeedLike = 0,
) -> BoundReport:
    """Certified bound on a functional of marginal spectra over the orbit of ``doc``."""
    f = FunctionalId.parse(functional)
    mode = BoundMode(mode)
    used_type: Optional[str] = None
    if mode is BoundMode.NQUBIT:
        if doc.n_qubits is None or doc.singular:
            raise ShapeError("nqubit mode needs an eigenvalue document with n_qubits")
        majorant = nqubit_bound_vector(doc.values, doc.n_qubits)
        bound, certificate, shape_label = evaluate(f, majorant), "qubit-marginals", f"{doc.n_qubits} qubits"
    else:
        shape_label = str(doc.bipartite_shape)
        if mode in (BoundMode.SINGLE1, BoundMode.SINGLE2):
            bound, majorant, certificate = _single(doc, f, 1 if mode is BoundMode.SINGLE1 else 2)
        elif mode is BoundMode.JOINT:
            shape = doc.bipartite_shape
            verdict = (
                check_sufficient_singular(doc.values, shape) if doc.singular else certify_spectrum(doc.values, shape)
            )
            if verdict:
                bound, majorant = _extreme_candidate(f, verdict)
                certificate = ",".join(sorted(c.value for c in verdict.applicable_cases))
            else:
                logger.info("no sufficiency case applies on %s; falling back to the quadratic programs", shape)
                bound, majorant, certificate, used_type = _qp(doc, f, qp_type)
        else:
            bound, majorant, certificate, used_type = _qp(doc, f, qp_type)

    sanity = _sanity_check(doc, f, mode, bound, seed)
    logger.info("%s %s bound for %s: %.10g (%s)", _direction(f), mode.value, f, bound, certificate)
    return BoundReport(
        functional=str(f),
        mode=mode.value,
        shape=shape_label,
        direction=_direction(f),
        bound=bound,
        certificate=certificate,
        majorant=np.asarray(majorant, dtype=float).tolist(),
        qp_type=used_type,
        sanity_value=sanity,
    )


def cmd_witness(doc: SpectrumDocument, family: str, alpha: Optional[float] = None) -> WitnessReport:
    try:
        fam = WitnessFamily(family)
    except ValueError as e:
        known = ", ".join(w.value for w in WitnessFamily)
        raise PreconditionError(f"unknown witness family {family!r}; known: {known}") from e
    if doc.singular or doc.shape is None:
        raise PreconditionError("witnesses need an eigenvalue document on a bipartite shape")
    shape = doc.bipartite_shape
    verdict = certify_spectrum(doc.values, shape)
    if verdict:
        cases = ", ".join(sorted(c.value for c in verdict.applicable_cases))
        raise PreconditionError(f"sufficiency case applies: {cases}")
    return build_witness(fam, doc.values, shape, alpha)


def cmd_qp(doc: SpectrumDocument, qp_type: str = "auto", positivity: bool = False) -> QpReport:
    """Solve and audit the quadratic programs without evaluating a functional."""
    if doc.shape is None:
        raise ShapeError("quadratic programs need a bipartite shape")
    shape = doc.bipartite_shape
    types = _qp_types(shape, qp_type)
    report = QpReport(shape=str(shape), positivity=positivity or doc.singular)
    for t in types:
        model, solution = solve_type(doc.values, shape, t, positivity, doc.singular)
        entry = QpEntry(model=model, solution=solution)
        if solution.status is QpStatus.OPTIMAL:
            mu = expand_mu(solution, model)
            verdict = check_sufficient_singular(mu, shape) if doc.singular else certify_spectrum(mu, shape)
            entry.mu = mu.tolist()
            entry.cases = sorted(c.value for c in verdict.applicable_cases)
        report.entries.append(entry)
    return report
