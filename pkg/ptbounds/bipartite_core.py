"""Dense linear algebra on bipartite and n-qubit operators.

Global indices follow the factor-1-major convention: the 1-based global
position ``k`` of the basis vector ``|i> (x) |j>`` is ``(i - 1) * d2 + j``.
In numpy terms an operator reshapes to ``(d1, d2, d1, d2)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ptbounds.config import load_tolerances
from ptbounds.errors import DomainError, NumericalError, ShapeError

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator, None]


@dataclass(frozen=True)
class BipartiteShape:
    d1: int
    d2: int

    def __post_init__(self) -> None:
        if int(self.d1) < 2 or int(self.d2) < 2:
            raise ShapeError(f"both factor dimensions must be >= 2, got ({self.d1}, {self.d2})")

    @property
    def total(self) -> int:
        return self.d1 * self.d2

    @property
    def is_square(self) -> bool:
        return self.d1 == self.d2

    def swapped(self) -> "BipartiteShape":
        return BipartiteShape(self.d2, self.d1)

    @classmethod
    def parse(cls, text: str) -> "BipartiteShape":
        """Parse ``"d1xd2"`` as used on the command line."""
        try:
            a, b = text.lower().split("x")
            return cls(int(a), int(b))
        except ValueError as e:
            raise ShapeError(f"cannot parse shape {text!r}; expected d1xd2") from e

    def __str__(self) -> str:
        return f"{self.d1}x{self.d2}"


def as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _square(C: np.ndarray, n: int | None = None) -> np.ndarray:
    A = np.asarray(C)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {A.shape}")
    if n is not None and A.shape[0] != n:
        raise ShapeError(f"expected a {n}x{n} matrix, got {A.shape[0]}x{A.shape[1]}")
    return A


def index_split(k: int, shape: BipartiteShape) -> Tuple[int, int]:
    """1-based global index -> (factor-1 index, factor-2 index)."""
    if not 1 <= k <= shape.total:
        raise ShapeError(f"index {k} outside 1..{shape.total}")
    i, j = divmod(k - 1, shape.d2)
    return i + 1, j + 1


def index_compose(i: int, j: int, shape: BipartiteShape) -> int:
    if not (1 <= i <= shape.d1 and 1 <= j <= shape.d2):
        raise ShapeError(f"factor indices ({i}, {j}) outside shape {shape}")
    return (i - 1) * shape.d2 + j


def partial_trace(C: np.ndarray, shape: BipartiteShape, which: int) -> np.ndarray:
    """Trace out factor ``which``.

    ``which=1`` sums the d1 diagonal blocks (result is d2 x d2);
    ``which=2`` takes the trace of every block (result is d1 x d1).
    """
    A = _square(C, shape.total).reshape(shape.d1, shape.d2, shape.d1, shape.d2)
    if which == 1:
        return np.einsum("ijik->jk", A)
    if which == 2:
        return np.einsum("ijkj->ik", A)
    raise ShapeError(f"which must be 1 or 2, got {which}")


def flip_conjugate(C: np.ndarray, shape: BipartiteShape) -> Tuple[np.ndarray, BipartiteShape]:
    """Return ``F C F*`` on the swapped shape, F exchanging the tensor factors."""
    A = _square(C, shape.total).reshape(shape.d1, shape.d2, shape.d1, shape.d2)
    flipped = A.transpose(1, 0, 3, 2).reshape(shape.total, shape.total)
    return flipped, shape.swapped()


def check_hermitian(C: np.ndarray) -> np.ndarray:
    A = _square(C)
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if np.max(np.abs(A - A.conj().T), initial=0.0) > load_tolerances().hermitian_rtol * max(scale, 1.0):
        raise DomainError("operator is not Hermitian within tolerance")
    return (A + A.conj().T) / 2


def eig_hermitian(C: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Spectrum sorted decreasing and U with ``U* C U`` diagonal."""
    H = check_hermitian(C)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Hermitian eigensolver did not converge for n={H.shape[0]}: {e}") from e
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def spectrum(C: np.ndarray) -> np.ndarray:
    return eig_hermitian(C)[0]


def singular_values(C: np.ndarray) -> np.ndarray:
    A = np.asarray(C)
    try:
        s = np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD did not converge for shape {A.shape}: {e}") from e
    return np.sort(s)[::-1]


def haar_unitary(n: int, seed: SeedLike = None) -> np.ndarray:
    """Haar unitary via QR of a complex Gaussian matrix with R-diagonal phases removed."""
    if n < 1:
        raise ShapeError("dimension must be >= 1")
    rng = as_rng(seed)
    Z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def conjugate(U: np.ndarray, C: np.ndarray) -> np.ndarray:
    return U @ C @ U.conj().T


def orbit_sample(spec: np.ndarray, seed: SeedLike = None) -> np.ndarray:
    """A Haar-random point ``U diag(spec) U*`` of the unitary orbit."""
    spec = np.asarray(spec, dtype=float)
    U = haar_unitary(spec.size, seed)
    return conjugate(U, np.diag(spec).astype(complex))


def local_diagonalize(C: np.ndarray, shape: BipartiteShape) -> np.ndarray:
    """Conjugate by ``U2 (x) U1`` so that both partial traces become diagonal.

    Marginal spectra come out decreasing; the global spectrum is unchanged.
    """
    H = check_hermitian(_square(C, shape.total))
    _, V1 = eig_hermitian(partial_trace(H, shape, 1))
    _, V2 = eig_hermitian(partial_trace(H, shape, 2))
    W = np.kron(V2.conj().T, V1.conj().T)
    return conjugate(W, H)


def bell_basis_unitary(d: int) -> np.ndarray:
    """Columns are the generalized Bell vectors psi_{nm}, column index ``n*d + m``."""
    if d < 2:
        raise ShapeError("Bell basis needs d >= 2")
    U = np.zeros((d * d, d * d), dtype=complex)
    j = np.arange(d)
    for n in range(d):
        phases = np.exp(2j * np.pi * j * n / d) / np.sqrt(d)
        for m in range(d):
            U[j * d + (j + m) % d, n * d + m] = phases
    return U


def nqubit_partial_trace(C: np.ndarray, n: int, keep: int) -> np.ndarray:
    """Reduce an n-qubit operator to qubit ``keep`` (1-based, qubit 1 most significant)."""
    if n < 1:
        raise ShapeError("need at least one qubit")
    if not 1 <= keep <= n:
        raise ShapeError(f"qubit index {keep} outside 1..{n}")
    A = _square(C, 2 ** n)
    left, right = 2 ** (keep - 1), 2 ** (n - keep)
    A = A.reshape(left, 2, right, left, 2, right)
    return np.einsum("iajibj->ab", A)
