from __future__ import annotations

import os
from functools import lru_cache

from pydantic import BaseModel, Field


class Tolerances(BaseModel):
    """Numerical tolerances used across the package.

    ``PTBOUNDS_TOL`` overrides ``atol`` and ``equality_atol`` together;
    ``PTBOUNDS_CLASS_GUARD`` overrides the enumeration guard.
    """

    atol: float = Field(1e-9, gt=0, description="Additive slack for majorization prefix inequalities")
    equality_atol: float = Field(1e-9, gt=0, description="Slack for eigenvalue equality patterns")
    hermitian_rtol: float = Field(1e-10, gt=0, description="Relative Hermiticity tolerance")
    psd_atol: float = Field(1e-8, gt=0, description="Allowed negative eigenvalue mass for PSD/state checks")
    rank_rtol: float = Field(1e-9, gt=0, description="Relative cutoff when counting nonzero eigenvalues")
    kkt_atol: float = Field(1e-9, gt=0, description="Feasibility slack for QP constraints")
    class_guard: int = Field(1_000_000, ge=1, description="Maximum number of canonical partition classes")


@lru_cache(maxsize=1)
def load_tolerances() -> Tolerances:
    overrides = {}
    tol = os.getenv("PTBOUNDS_TOL")
    if tol:
        overrides["atol"] = float(tol)
        overrides["equality_atol"] = float(tol)
    guard = os.getenv("PTBOUNDS_CLASS_GUARD")
    if guard:
        overrides["class_guard"] = int(guard)
    return Tolerances(**overrides)


def default_atol() -> float:
    return load_tolerances().atol
