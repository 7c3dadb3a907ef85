"""Seeded Monte Carlo campaigns over the claims listed in ``claims.yaml``.

Every trial draws from its own generator seeded with
``(seed, claim index, target index, trial index)``, so trials can run in
any order on a thread pool and the report is still reproducible.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from ptbounds.bipartite_core import (
    BipartiteShape,
    bell_basis_unitary,
    conjugate,
    haar_unitary,
    nqubit_partial_trace,
    orbit_sample,
    partial_trace,
    singular_values,
    spectrum,
)
from ptbounds.errors import PreconditionError, ShapeError
from ptbounds.harness.documents import CampaignConfig, CampaignReport, ClaimResult
from ptbounds.majorization import majorization_slack, majorizes, weakly_majorizes
from ptbounds.spectral_bounds import (
    certify_spectrum,
    characterize_2xd,
    check_sufficient_square,
    joint_envelope,
    joint_marginal_spectrum,
    joint_marginals_of_diagonal,
    nqubit_bound_vector,
    operator_majorant,
    single_trace_max,
    single_trace_max_sv,
)
from ptbounds.util.specs_loader import ClaimSpecs

logger = logging.getLogger(__name__)

Target = Union[BipartiteShape, int]


@dataclass
class TrialOutcome:
    ok: bool
    slack: float


def _gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)


def _single_trace(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    lam = rng.normal(size=shape.total)
    C = orbit_sample(lam, rng)
    ok, slack = True, np.inf
    for which in (1, 2):
        y = single_trace_max(lam, shape, which)
        x = spectrum(partial_trace(C, shape, which))
        ok &= majorizes(y, x, tol)
        slack = min(slack, majorization_slack(y, x))
    return TrialOutcome(ok, slack)


def _singular_single_trace(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    C = _gaussian(rng, shape.total)
    s = singular_values(C)
    ok, slack = True, np.inf
    for which in (1, 2):
        y = single_trace_max_sv(s, shape, which)
        x = singular_values(partial_trace(C, shape, which))
        ok &= weakly_majorizes(y, x, tol)
        slack = min(slack, majorization_slack(y, x))
    return TrialOutcome(ok, slack)


def _bell_minimum(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    d = shape.d1
    G = _gaussian(rng, shape.total)
    C = G @ G.conj().T
    lam = spectrum(C)
    flat = np.full(d, lam.sum() / d)
    bell = conjugate(bell_basis_unitary(d), np.diag(lam).astype(complex))
    deviation = float(np.max(np.abs(spectrum(partial_trace(bell, shape, 2)) - flat)))
    ok = deviation <= 1e-10 * max(1.0, lam.sum()) and majorizes(spectrum(partial_trace(C, shape, 2)), flat, tol)
    return TrialOutcome(ok, -deviation)


def _flat_window_spectrum(rng: np.random.Generator, n: int, first: int, last: int, psd: bool) -> np.ndarray:
    # lam_first = ... = lam_last (1-based), free entries above and below
    level = abs(rng.normal()) + 0.5 if psd else rng.normal()
    above = level + np.abs(rng.normal(size=first - 1))
    below = level - np.abs(rng.normal(size=n - last))
    if psd:
        below = level * rng.uniform(size=n - last)
    return np.sort(np.concatenate([above, np.full(last - first + 1, level), below]))[::-1]


def _joint_outcome(lam: np.ndarray, shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    verdict = certify_spectrum(lam, shape)
    if not verdict:
        raise PreconditionError(f"generated spectrum fits no sufficiency case on {shape}")
    x = joint_marginal_spectrum(orbit_sample(lam, rng), shape).vector
    ys = [joint_marginals_of_diagonal(c).vector for c in verdict.candidates]
    ok = any(majorizes(y, x, tol) for y in ys)
    return TrialOutcome(ok, max(majorization_slack(y, x) for y in ys))


def _square_sufficiency(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    n = shape.total
    k = int(rng.integers(1, 5))
    lam = _flat_window_spectrum(rng, n, k, n - 4 + k, psd=False)
    if not check_sufficient_square(lam, shape.d1):
        raise PreconditionError("square window generator produced an uncertified spectrum")
    return _joint_outcome(lam, shape, rng, tol)


def _low_rank_spectrum(rng: np.random.Generator, n: int, psd: bool) -> np.ndarray:
    r = int(rng.integers(1, 4))
    nz = np.abs(rng.normal(size=r)) if psd else rng.normal(size=r)
    return np.sort(np.concatenate([nz, np.zeros(n - r)]))[::-1]


def _combine(outcomes: List[TrialOutcome]) -> TrialOutcome:
    return TrialOutcome(all(o.ok for o in outcomes), min(o.slack for o in outcomes))


def _rect_sufficiency(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    # every trial covers both cases
    n = shape.total
    spectra = [_flat_window_spectrum(rng, n, 2, n - 1, psd=False), _low_rank_spectrum(rng, n, psd=False)]
    return _combine([_joint_outcome(lam, shape, rng, tol) for lam in spectra])


def _qubit_qudit_spectrum(case: int, d: int, rng: np.random.Generator) -> np.ndarray:
    n = 2 * d
    if case == 0:
        lam = _low_rank_spectrum(rng, n, psd=True)
    elif case == 1:
        lam = _flat_window_spectrum(rng, n, 2, n - 1, psd=True)
    elif case == 2:
        level = abs(rng.normal()) + 0.5
        last = level * rng.uniform()
        second = 2 * (d - 2) * level + last + abs(rng.normal())
        lam = np.concatenate([[second + abs(rng.normal()), second], np.full(n - 3, level), [last]])
    else:
        level = abs(rng.normal()) + 0.5
        top = level + np.sort(np.abs(rng.normal(size=2)))[::-1]
        lam = np.concatenate([top, np.full(3, level), [0.0]])
    if not characterize_2xd(lam, d):
        raise PreconditionError(f"qubit-qudit generator case {case} produced an uncertified spectrum")
    return lam


def _qubit_qudit(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    # the fourth case exists only for d = 3
    d = shape.d2
    cases = range(4 if d == 3 else 3)
    return _combine([_joint_outcome(_qubit_qudit_spectrum(c, d, rng), shape, rng, tol) for c in cases])


def _operator_majorant(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    k1 = int(rng.integers(0, shape.d2 + 1))
    k2 = int(rng.integers(0, shape.d1 + 1))
    S = np.zeros((shape.total, shape.total), dtype=complex)
    for i in range(k1):
        P = np.zeros((shape.d2, shape.d2))
        P[i, i] = 1.0
        S += np.kron(haar_unitary(shape.d1, rng), P)
    for j in range(k2):
        Q = np.zeros((shape.d1, shape.d1))
        Q[j, j] = 1.0
        S += np.kron(Q, haar_unitary(shape.d2, rng))
    y = operator_majorant(shape, k1, k2)
    x = singular_values(S)
    return TrialOutcome(weakly_majorizes(y, x, tol), majorization_slack(y, x))


def _qubit_marginals(n: int, rng: np.random.Generator, tol: float) -> TrialOutcome:
    lam = rng.normal(size=2 ** n)
    C = orbit_sample(lam, rng)
    x = np.concatenate([spectrum(nqubit_partial_trace(C, n, j)) for j in range(1, n + 1)])
    y = nqubit_bound_vector(lam, n)
    return TrialOutcome(majorizes(y, x, tol), majorization_slack(y, x))


def _joint_envelope(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    lam = rng.normal(size=shape.total)
    joint = joint_marginal_spectrum(orbit_sample(lam, rng), shape)
    first = np.concatenate([[0.0], np.cumsum(joint.first)])
    second = np.concatenate([[0.0], np.cumsum(joint.second)])
    gaps = joint_envelope(lam, shape) - np.add.outer(first, second)
    slack = float(gaps.min())
    return TrialOutcome(slack >= -tol * max(1.0, float(np.abs(lam).sum())), slack)


def _diagonal_schur(shape: BipartiteShape, rng: np.random.Generator, tol: float) -> TrialOutcome:
    lam = rng.normal(size=shape.total)
    diag = np.real(np.diag(orbit_sample(lam, rng)))
    return TrialOutcome(majorizes(lam, diag, tol), majorization_slack(lam, diag))


_CHECKS: Dict[str, Callable[[Target, np.random.Generator, float], TrialOutcome]] = {
    "single_trace": _single_trace,
    "singular_single_trace": _singular_single_trace,
    "bell_minimum": _bell_minimum,
    "square_sufficiency": _square_sufficiency,
    "rect_sufficiency": _rect_sufficiency,
    "qubit_qudit": _qubit_qudit,
    "operator_majorant": _operator_majorant,
    "qubit_marginals": _qubit_marginals,
    "joint_envelope": _joint_envelope,
    "diagonal_schur": _diagonal_schur,
}

_SHAPE_RULES: Dict[str, Callable[[BipartiteShape], bool]] = {
    "bell_minimum": lambda s: s.is_square,
    "square_sufficiency": lambda s: s.is_square,
    "rect_sufficiency": lambda s: s.d1 < s.d2,
    "qubit_qudit": lambda s: s.d1 == 2 and s.d2 > 2,
}


def _targets(claim: dict, config: CampaignConfig, specs: ClaimSpecs) -> List[Target]:
    if "qubits" in claim:
        return [int(n) for n in (config.qubits or claim["qubits"])]
    rule = _SHAPE_RULES.get(claim["check"], lambda s: True)
    shapes = [BipartiteShape.parse(s) for s in (config.shapes or specs.default_shapes(claim["name"]))]
    usable = [s for s in shapes if rule(s)]
    for s in shapes:
        if not rule(s):
            logger.warning("claim %s does not apply to shape %s; skipped", claim["name"], s)
    if not usable:
        raise ShapeError(f"claim {claim['name']} has no applicable shape among {[str(s) for s in shapes]}")
    return usable


def run_claim(
    name: str, config: CampaignConfig, claim_index: int = 0, specs: Optional[ClaimSpecs] = None
) -> List[ClaimResult]:
    specs = specs or ClaimSpecs()
    claim = specs.claim(name)
    check = _CHECKS[claim["check"]]
    trials = config.trials or specs.default_trials(name)
    results = []
    for t_index, target in enumerate(_targets(claim, config, specs)):
        def trial(i: int, target=target, t_index=t_index) -> TrialOutcome:
            rng = np.random.default_rng([config.seed, claim_index, t_index, i])
            return check(target, rng, config.tolerance)

        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(trial, range(trials)))
        failed = [i for i, o in enumerate(outcomes) if not o.ok]
        label = f"{target} qubits" if isinstance(target, int) else str(target)
        result = ClaimResult(
            claim=name,
            target=label,
            trials=trials,
            violations=len(failed),
            worst_slack=min(o.slack for o in outcomes),
            first_violation_trial=failed[0] if failed else None,
        )
        log = logger.warning if failed else logger.info
        log("%s on %s: %d/%d violations, worst slack %.3g", name, label, len(failed), trials, result.worst_slack)
        results.append(result)
    return results


def cmd_verify(config: CampaignConfig, specs: Optional[ClaimSpecs] = None) -> CampaignReport:
    specs = specs or ClaimSpecs()
    for name in config.claims:
        specs.claim(name)
    report = CampaignReport(seed=config.seed, tolerance=config.tolerance)
    for index, name in enumerate(config.claims):
        report.results.extend(run_claim(name, config, index, specs))
    logger.info("campaign finished: %d violations over %d claims", report.total_violations, len(config.claims))
    return report
