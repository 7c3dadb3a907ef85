"""JSON documents read and written by the command line."""
from __future__ import annotations

import json
import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from ptbounds.bipartite_core import BipartiteShape
from ptbounds.config import default_atol
from ptbounds.errors import DomainError
from ptbounds.qp_bounds import QpModel, QpSolution

logger = logging.getLogger(__name__)


class SpectrumKind(str, Enum):
    EIGENVALUES = "eigenvalues"
    SINGULAR_VALUES = "singular_values"


class SpectrumDocument(BaseModel):
    """A spectrum together with the system it lives on."""

    spectrum: List[float] = Field(..., description="Eigenvalues or singular values, any order")
    shape: Optional[Tuple[int, int]] = Field(None, description="(d1, d2) for a bipartite system")
    n_qubits: Optional[int] = Field(None, ge=1, description="Number of qubits for an n-qubit system")
    kind: SpectrumKind = SpectrumKind.EIGENVALUES

    @model_validator(mode="after")
    def _consistent(self) -> "SpectrumDocument":
        if (self.shape is None) == (self.n_qubits is None):
            raise ValueError("give exactly one of shape or n_qubits")
        expected = self.shape[0] * self.shape[1] if self.shape else 2 ** self.n_qubits
        if len(self.spectrum) != expected:
            raise ValueError(f"spectrum has {len(self.spectrum)} entries, expected {expected}")
        if self.kind is SpectrumKind.SINGULAR_VALUES and min(self.spectrum) < 0:
            raise ValueError("singular values must be nonnegative")
        return self

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.spectrum, dtype=float)

    @property
    def singular(self) -> bool:
        return self.kind is SpectrumKind.SINGULAR_VALUES

    @property
    def bipartite_shape(self) -> BipartiteShape:
        if self.shape is None:
            # a qubit register splits as first qubit (x) rest
            return BipartiteShape(2, 2 ** (self.n_qubits - 1))
        return BipartiteShape(*self.shape)


def load_spectrum_document(path: Path) -> SpectrumDocument:
    try:
        return SpectrumDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DomainError(f"invalid spectrum document {path}: {e.errors()[0]['msg']}") from e


class CampaignConfig(BaseModel):
    claims: List[str] = Field(..., min_length=1, description="Claim identifiers from claims.yaml")
    trials: Optional[int] = Field(None, ge=1, description="Trials per target; defaults to each claim's own count")
    seed: int = 0
    shapes: List[str] = Field(default_factory=list, description="Overrides each claim's default shapes, e.g. '3x3'")
    qubits: List[int] = Field(default_factory=list, description="Overrides the default qubit counts")
    tolerance: float = Field(default_factory=default_atol, gt=0, description="Defaults to PTBOUNDS_TOL when set")
    workers: int = Field(4, ge=1)


class BoundReport(BaseModel):
    functional: str
    mode: str
    shape: str
    direction: str = Field(..., description="'upper' for Schur-convex functionals, 'lower' for Schur-concave")
    bound: float
    certificate: str = Field(..., description="Result or case labels that certify the bound")
    majorant: List[float]
    qp_type: Optional[str] = None
    sanity_value: Optional[float] = Field(None, description="Functional value at one fresh Haar sample")


class ClaimResult(BaseModel):
    claim: str
    target: str
    trials: int
    violations: int
    worst_slack: float = Field(..., description="Smallest slack over all trials; negative means violated")
    first_violation_trial: Optional[int] = None


class CampaignReport(BaseModel):
    seed: int
    tolerance: float
    results: List[ClaimResult] = Field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return sum(r.violations for r in self.results)

    @property
    def passed(self) -> bool:
        return self.total_violations == 0


class QpEntry(BaseModel):
    model: QpModel
    solution: QpSolution
    mu: Optional[List[float]] = None
    cases: List[str] = Field(default_factory=list)


class QpReport(BaseModel):
    shape: str
    positivity: bool
    entries: List[QpEntry] = Field(default_factory=list)


def dump_json(model: BaseModel, path: Optional[Path] = None) -> str:
    text = json.dumps(model.model_dump(mode="json"), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
        logger.info("wrote %s", path)
    return text
