import numpy as np
import pytest

from ptbounds.bipartite_core import orbit_sample, spectrum
from ptbounds.errors import DomainError, PreconditionError, ShapeError
from ptbounds.majorization import (
    first_violation,
    horn_matrix,
    majorization_slack,
    majorizes,
    sorted_desc,
    two_index_rotation,
    weakly_majorizes,
)


def test_majorizes_basic():
    assert majorizes([3, 0, 0], [1, 1, 1])
    assert not majorizes([1, 1, 1], [3, 0, 0])
    assert majorizes([0, 3, 0], [1, 2, 0])
    assert not majorizes([2, 1], [1, 1])


def test_weak_majorization_ignores_total():
    assert weakly_majorizes([3, 1], [2, 1])
    assert not weakly_majorizes([2, 1], [3, 0])


def test_first_violation():
    assert first_violation([1, 1, 1], [3, 0, 0]) == 1
    assert first_violation([3, 0, 0], [1, 1, 1]) is None
    assert first_violation([2, 1], [1, 1]) == 2
    assert first_violation([2, 1], [1, 1], weak=True) is None


def test_tolerance_is_scaled():
    assert majorizes([1.0, 0.0], [1.0 + 1e-12, -1e-12])
    assert not majorizes([1.0, 0.0], [1.0 + 1e-6, -1e-6])
    assert majorizes([1.0, 0.0], [1.0 + 1e-6, -1e-6], tol=1e-5)


def test_slack_sign():
    assert majorization_slack([3, 0, 0], [1, 1, 1]) == pytest.approx(0.0)
    assert majorization_slack([1, 1, 1], [3, 0, 0]) == pytest.approx(-2.0)


def test_length_mismatch_and_nan():
    with pytest.raises(ShapeError):
        majorizes([1, 2], [1, 2, 3])
    with pytest.raises(DomainError):
        sorted_desc([1.0, np.nan])


def test_two_index_rotation():
    M = two_index_rotation([3.0, 1.0, 0.0], 1, 2, 0.5)
    np.testing.assert_allclose(np.diag(M), [2.5, 1.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(spectrum(M), [3.0, 1.0, 0.0], atol=1e-12)
    off = M - np.diag(np.diag(M))
    off[0, 1] = off[1, 0] = 0.0
    assert np.allclose(off, 0.0)


def test_two_index_rotation_bounds():
    with pytest.raises(DomainError):
        two_index_rotation([3.0, 1.0], 1, 2, 2.0)
    with pytest.raises(DomainError):
        two_index_rotation([1.0, 1.0], 1, 2, 0.1)
    with pytest.raises(ShapeError):
        two_index_rotation([3.0, 1.0], 1, 1, 0.5)


def test_horn_matrix_fixed():
    M = horn_matrix([2, 2, 2, 1], [4, 2, 1, 0])
    np.testing.assert_allclose(np.diag(M), [2, 2, 2, 1], atol=1e-10)
    np.testing.assert_allclose(spectrum(M), [4, 2, 1, 0], atol=1e-10)


def test_horn_matrix_random(rng):
    for n in (2, 3, 6, 9):
        lam = rng.normal(size=n)
        c = np.real(np.diag(orbit_sample(lam, rng)))
        M = horn_matrix(c, lam)
        np.testing.assert_allclose(np.diag(M), c, atol=1e-9)
        np.testing.assert_allclose(spectrum(M), np.sort(lam)[::-1], atol=1e-9)


def test_horn_matrix_rejects_non_majorized():
    with pytest.raises(PreconditionError):
        horn_matrix([3, 0, 0], [1, 1, 1])
