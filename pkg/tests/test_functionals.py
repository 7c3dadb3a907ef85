import math

import numpy as np
import pytest

from ptbounds.bipartite_core import BipartiteShape
from ptbounds.errors import DomainError
from ptbounds.functionals import Direction, FunctionalId, FunctionalKind, evaluate, mutual_information, validate_state


def build(text):
    return FunctionalId.parse(text)


def test_parse_and_format():
    for text in ("schatten:2", "powsum:1.5", "kyfan:3", "opnorm", "min", "vn", "renyi:0.5", "det", "neg:vn"):
        assert str(build(text)) == text
    assert build("neg:renyi:5").inner == FunctionalId(FunctionalKind.RENYI, 5.0)


@pytest.mark.parametrize("text", ["foo", "renyi:1", "renyi", "schatten:-1", "kyfan:1.5", "vn:2", "neg:", "powsum:x"])
def test_parse_rejects(text):
    with pytest.raises(DomainError):
        build(text)


def test_directions():
    assert build("schatten:2").direction is Direction.SCHUR_CONVEX
    assert build("schatten:0.5").direction is Direction.SCHUR_CONCAVE
    assert build("kyfan:2").is_convex
    assert not build("vn").is_convex
    assert not build("det").is_convex
    assert build("neg:vn").is_convex
    assert not build("neg:opnorm").is_convex
    assert build("opnorm").increasing_schur_convex
    assert not build("neg:vn").increasing_schur_convex


def test_needs_nonnegative():
    assert build("vn").needs_nonnegative
    assert build("neg:renyi:2").needs_nonnegative
    assert build("powsum:0.5").needs_nonnegative
    assert not build("powsum:2").needs_nonnegative


def test_evaluate_values():
    assert evaluate(build("schatten:2"), [3, 4]) == pytest.approx(5.0)
    assert evaluate(build("powsum:2"), [3, -4]) == pytest.approx(25.0)
    assert evaluate(build("kyfan:2"), [1, -5, 3]) == pytest.approx(8.0)
    assert evaluate(build("opnorm"), [1, -5]) == pytest.approx(5.0)
    assert evaluate(build("min"), [1, -5]) == pytest.approx(-5.0)
    assert evaluate(build("vn"), [0.5, 0.5, 0.0]) == pytest.approx(math.log(2))
    assert evaluate(build("renyi:2"), [0.5, 0.5]) == pytest.approx(math.log(2))
    assert evaluate(build("det"), [2, 3]) == pytest.approx(6.0)
    assert evaluate(build("neg:vn"), [0.5, 0.5]) == pytest.approx(-math.log(2))


def test_evaluate_domain():
    with pytest.raises(DomainError):
        evaluate(build("vn"), [-0.5, 1.5])
    with pytest.raises(DomainError):
        evaluate(build("kyfan:3"), [1, 2])
    with pytest.raises(DomainError):
        evaluate(build("renyi:2"), [0.0, 0.0])
    # rounding noise below the PSD tolerance is clipped
    assert evaluate(build("vn"), [1.0, -1e-12]) == pytest.approx(0.0)


def test_mutual_information():
    shape = BipartiteShape(2, 2)
    product = np.kron(np.diag([0.7, 0.3]), np.diag([0.6, 0.4]))
    assert mutual_information(product, shape) == pytest.approx(0.0, abs=1e-12)
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert mutual_information(np.outer(psi, psi), shape) == pytest.approx(2 * math.log(2))


def test_validate_state():
    with pytest.raises(DomainError):
        validate_state(np.diag([0.5, 0.4]))
    with pytest.raises(DomainError):
        validate_state(np.diag([1.5, -0.5]))
    np.testing.assert_allclose(validate_state(np.diag([0.25, 0.75])), [0.75, 0.25])


def test_renyi_values_and_limit():
    assert evaluate(build("renyi:2"), [0.5, 0.25, 0.25]) == pytest.approx(-math.log(3 / 8))
    p = [0.5, 0.3, 0.2]
    vn = evaluate(build("vn"), p)
    for alpha in (1 - 1e-4, 1 + 1e-4):
        assert evaluate(FunctionalId(FunctionalKind.RENYI, alpha), p) == pytest.approx(vn, abs=1e-3)
