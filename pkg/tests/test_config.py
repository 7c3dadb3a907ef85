import pytest

from ptbounds.config import default_atol, load_tolerances
from ptbounds.errors import CombinatorialGuardError, NumericalError, PtBoundsError, ShapeError


def test_defaults():
    tol = load_tolerances()
    assert tol.atol == 1e-9
    assert tol.class_guard == 1_000_000
    assert default_atol() == 1e-9


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("PTBOUNDS_TOL", "1e-6")
    monkeypatch.setenv("PTBOUNDS_CLASS_GUARD", "50")
    load_tolerances.cache_clear()
    tol = load_tolerances()
    assert tol.atol == 1e-6
    assert tol.equality_atol == 1e-6
    assert tol.class_guard == 50


def test_exit_codes():
    assert ShapeError("x").exit_code == 2
    assert CombinatorialGuardError("x").exit_code == 2
    assert NumericalError("x").exit_code == 3
    assert isinstance(ShapeError("x"), ValueError)
    with pytest.raises(PtBoundsError):
        raise NumericalError("boom")
