import numpy as np
import pytest

from ptbounds.bipartite_core import BipartiteShape, orbit_sample
from ptbounds.errors import DomainError, PreconditionError, ShapeError, UncertifiableError
from ptbounds.functionals import FunctionalId, evaluate
from ptbounds.majorization import majorizes, weakly_majorizes
from ptbounds.qp_bounds import (
    QpSolution,
    QpStatus,
    QpType,
    applicable_types,
    best_qp_bound,
    build_qp_rect,
    build_qp_singular,
    build_qp_square,
    expand_mu,
    qp_bound,
    solve_qp,
    solve_type,
)
from ptbounds.spectral_bounds import (
    SufficiencyCase,
    SufficiencyVerdict,
    certify_spectrum,
    check_sufficient_singular,
    joint_marginal_spectrum,
)

SQUARE = BipartiteShape(3, 3)
# the reference spectrum in units of 1/45
REFERENCE_45 = np.array([15, 10, 5, 4, 3, 3, 2, 2, 1], dtype=float)


def build_solution(qp_type, lam=REFERENCE_45, positivity=False):
    model = build_qp_square(lam, qp_type, 3, positivity)
    return model, solve_qp(model)


def random_feasible_points(model, center, rng, count=400, radius=2.0):
    """Feasible points near ``center`` along directions that keep the trace."""
    G, h = model.inequality_system()
    E, e = model.equality_system()
    n = model.variable_count
    basis = np.linalg.svd(E)[2][E.shape[0]:].T if E.size else np.eye(n)
    points = []
    for _ in range(count):
        x = center + basis @ rng.uniform(-radius, radius, size=basis.shape[1])
        if np.all(G @ x <= h + 1e-12):
            points.append(x)
    return points


def test_square_model_rows():
    model = build_qp_square(REFERENCE_45, QpType.TYPE_1, 3)
    assert model.multiplicities == [1, 1, 1, 6]
    assert model.objective_diag == [1, 1, 1, 6]
    assert len(model.maj_rows) == 8
    assert model.maj_rows[-1] == [1, 1, 1, 5]
    assert model.maj_rhs == pytest.approx([15, 25, 30, 34, 37, 40, 42, 44])
    assert model.eq_rhs == pytest.approx(45)
    assert build_qp_square(REFERENCE_45, QpType.TYPE_2, 3).maj_rows[-1] == [1, 1, 6, 0]
    rows = build_qp_square(REFERENCE_45, QpType.TYPE_3, 3).maj_rows
    assert rows[6] == [1, 6, 0, 0] and rows[7] == [1, 6, 1, 0]
    rows = build_qp_square(REFERENCE_45, QpType.TYPE_4, 3).maj_rows
    assert rows[0] == [1, 0, 0, 0] and rows[6] == [6, 1, 0, 0]


def test_square_model_rejects_rect_and_length():
    with pytest.raises(ShapeError):
        build_qp_square(REFERENCE_45, QpType.RECT, 3)
    with pytest.raises(ShapeError):
        build_qp_square(np.ones(8), QpType.TYPE_1, 3)


def test_rect_model_rows():
    model = build_qp_rect(np.arange(6, 0, -1), BipartiteShape(2, 3))
    assert model.multiplicities == [1, 4, 1]
    assert model.maj_rows == [[1, 0, 0], [1, 1, 0], [1, 2, 0], [1, 3, 0], [1, 4, 0]]
    with pytest.raises(ShapeError):
        build_qp_rect(np.ones(9), SQUARE)


def test_inequality_system_deduplicates():
    model = build_qp_square(REFERENCE_45, QpType.TYPE_4, 3, positivity=True)
    G, h = model.inequality_system()
    keys = [tuple(row) for row in G.tolist()]
    assert len(keys) == len(set(keys))
    assert G.shape[0] == h.size


def test_pure_state_type_1():
    model = build_qp_square([1, 0, 0, 0], QpType.TYPE_1, 2)
    solution = solve_qp(model)
    assert solution.status is QpStatus.OPTIMAL
    np.testing.assert_allclose(solution.x, [1, 0, 0, 0], atol=1e-12)
    assert solution.objective == pytest.approx(1.0)


@pytest.mark.parametrize("qp_type", [QpType.TYPE_1, QpType.TYPE_2, QpType.TYPE_3, QpType.TYPE_4])
def test_flat_spectrum_is_its_own_majorant(qp_type):
    _, solution = build_solution(qp_type, np.full(9, 1 / 9))
    np.testing.assert_allclose(solution.x, np.full(4, 1 / 9), atol=1e-12)
    assert solution.objective == pytest.approx(1 / 9)


def test_reference_type_1():
    _, solution = build_solution(QpType.TYPE_1)
    np.testing.assert_allclose(solution.x, [15, 12, 12, 1], atol=1e-9)
    assert solution.objective == pytest.approx(519)


def test_reference_type_2_closed_form():
    _, solution = build_solution(QpType.TYPE_2)
    np.testing.assert_allclose(solution.x, np.array([195, 165, 41, -21]) / 13, atol=1e-9)
    assert solution.objective == pytest.approx(225 + 37752 / 169, abs=1e-9)
    assert solution.kkt_residual < 1e-8


def test_reference_type_3():
    _, solution = build_solution(QpType.TYPE_3)
    np.testing.assert_allclose(solution.x, [20, 5, -2.5, -2.5], atol=1e-9)
    assert solution.objective == pytest.approx(562.5)


def test_reference_with_positivity():
    _, solution = build_solution(QpType.TYPE_2, positivity=True)
    np.testing.assert_allclose(solution.x, [15, 15, 2.5, 0], atol=1e-9)
    _, solution = build_solution(QpType.TYPE_3, positivity=True)
    np.testing.assert_allclose(solution.x, [23, 11 / 3, 0, 0], atol=1e-9)
    _, solution = build_solution(QpType.TYPE_4, positivity=True)
    assert solution.status is QpStatus.INFEASIBLE
    assert solution.x == []


def test_type_2_beats_a_feasible_grid():
    model, solution = build_solution(QpType.TYPE_2)
    x1, x2, x3 = np.meshgrid(np.arange(15, 20.01, 0.1), np.arange(5, 15.01, 0.1), np.arange(0, 6.01, 0.1))
    x1, x2, x3 = x1.ravel(), x2.ravel(), x3.ravel()
    X = np.stack([x1, x2, x3, 45 - x1 - x2 - 6 * x3], axis=1)
    G, h = model.inequality_system()
    feasible = X[np.all(X @ G.T <= h + 1e-9, axis=1)]
    objective = feasible ** 2 @ np.array(model.objective_diag)
    assert feasible.shape[0] > 0
    assert solution.objective <= objective.min() + 1e-9
    assert objective.min() - solution.objective < 5.0


def test_solutions_beat_random_feasible_points(rng):
    for qp_type in (QpType.TYPE_1, QpType.TYPE_2, QpType.TYPE_3, QpType.TYPE_4):
        lam = np.sort(np.abs(rng.normal(size=9)))[::-1] * 10
        model, solution = build_solution(qp_type, lam)
        x = np.array(solution.x)
        A = np.array(model.objective_diag)
        for point in random_feasible_points(model, x, rng, radius=0.5):
            assert point ** 2 @ A >= solution.objective - 1e-9


def test_expanded_majorant_majorizes_and_certifies():
    for qp_type in (QpType.TYPE_1, QpType.TYPE_2, QpType.TYPE_3, QpType.TYPE_4):
        model, solution = build_solution(qp_type)
        mu = expand_mu(solution, model)
        assert mu.size == 9
        assert majorizes(mu, REFERENCE_45)
        assert certify_spectrum(mu, SQUARE)


def test_expand_mu():
    model = build_qp_square(REFERENCE_45, QpType.TYPE_4, 3)
    solution = QpSolution(status=QpStatus.OPTIMAL, x=[7, 3, 2, 1])
    np.testing.assert_allclose(expand_mu(solution, model), [7] * 6 + [3, 2, 1])
    with pytest.raises(PreconditionError):
        expand_mu(QpSolution(status=QpStatus.INFEASIBLE), model)


def test_rect_program_certifies():
    shape = BipartiteShape(2, 3)
    lam = np.array([6, 5, 4, 3, 2, 1], dtype=float)
    model, solution = solve_type(lam, shape, QpType.RECT)
    mu = expand_mu(solution, model)
    assert majorizes(mu, lam)
    assert SufficiencyCase.RECT_FLAT_INTERIOR in certify_spectrum(mu, shape).applicable_cases


def test_rect_program_on_tall_shape():
    model, solution = solve_type(np.arange(6, 0, -1), BipartiteShape(3, 2), QpType.RECT)
    assert model.shape == (2, 3)
    assert solution.status is QpStatus.OPTIMAL


def test_singular_programs():
    model = build_qp_singular(np.zeros(9), SQUARE, QpType.TYPE_1)
    assert model.singular and model.positivity
    solution = solve_qp(model)
    np.testing.assert_allclose(solution.x, 0.0, atol=1e-12)

    solution = solve_qp(build_qp_singular(np.ones(9), SQUARE, QpType.TYPE_2))
    np.testing.assert_allclose(solution.x, 1.0, atol=1e-9)

    sigma = np.array([5, 4, 3, 3, 2, 1, 1, 0.5, 0.2])
    model, solution = solve_type(sigma, SQUARE, QpType.TYPE_2, singular=True)
    mu = expand_mu(solution, model)
    assert weakly_majorizes(mu, sigma)
    assert np.all(mu >= -1e-12)
    with pytest.raises(DomainError):
        build_qp_singular([1, -1, 0, 0], BipartiteShape(2, 2), QpType.TYPE_1)


def test_qp_bound_on_flat_majorant():
    mu = np.full(9, 1 / 9)
    verdict = certify_spectrum(mu, SQUARE)
    f = FunctionalId.parse("schatten:2")
    assert qp_bound(f, mu, SQUARE, verdict) == pytest.approx(np.sqrt(6 / 9))


def test_qp_bound_refuses_uncertified():
    f = FunctionalId.parse("schatten:2")
    with pytest.raises(UncertifiableError):
        qp_bound(f, np.ones(9), SQUARE, SufficiencyVerdict())
    weak = check_sufficient_singular(np.ones(9), SQUARE)
    with pytest.raises(UncertifiableError):
        qp_bound(FunctionalId.parse("vn"), np.ones(9), SQUARE, weak)


def test_applicable_types():
    assert applicable_types(SQUARE) == [QpType.TYPE_1, QpType.TYPE_2, QpType.TYPE_3, QpType.TYPE_4]
    assert applicable_types(BipartiteShape(2, 3)) == [QpType.RECT]


def test_best_bound_picks_type_2_for_squares(reference_spectrum):
    f = FunctionalId.parse("powsum:2")
    types = (QpType.TYPE_1, QpType.TYPE_2, QpType.TYPE_3)
    result = best_qp_bound(f, reference_spectrum, SQUARE, types=types)
    assert result.qp_type is QpType.TYPE_2
    assert result.value == pytest.approx(321110 / 169 / 2025)
    assert result.value < 2358 / 2025
    assert best_qp_bound(f, reference_spectrum, SQUARE).value <= result.value + 1e-12


def test_best_bounds_hold_on_samples(reference_spectrum, rng):
    upper = best_qp_bound(FunctionalId.parse("schatten:2"), reference_spectrum, SQUARE)
    vn = FunctionalId.parse("vn")
    lower = best_qp_bound(vn, reference_spectrum, SQUARE)
    assert lower.model.positivity
    for _ in range(40):
        joint = joint_marginal_spectrum(orbit_sample(reference_spectrum, rng), SQUARE).vector
        assert evaluate(FunctionalId.parse("schatten:2"), joint) <= upper.value + 1e-9
        assert evaluate(vn, joint) >= lower.value - 1e-9


@pytest.mark.parametrize("text", ["schatten:2", "schatten:4", "kyfan:2", "opnorm", "vn", "renyi:2", "det"])
def test_bound_validity_per_functional(text, rng):
    lam = np.sort(rng.dirichlet(np.ones(9)))[::-1]
    f = FunctionalId.parse(text)
    result = best_qp_bound(f, lam, SQUARE)
    for _ in range(30):
        value = evaluate(f, joint_marginal_spectrum(orbit_sample(lam, rng), SQUARE).vector)
        if f.is_convex:
            assert value <= result.value + 1e-7
        else:
            assert value >= result.value - 1e-7
