"""Dense complex linear algebra and the exact computations used as oracles.

Everything here routes through the eigendecomposition of a Hermitian matrix,
which is the universal reference: operator exponentials, inverses and trace
distances computed this way are what every discretized approximation in the
package is checked against. Values are immutable after construction and safe
to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import SingularityError, ValidationError

HERMITICITY_ATOL = 1e-12
STATE_NORM_ATOL = 1e-12
DENSITY_ATOL = 1e-12
DIMENSION_CAP = 4096


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_square_matrix(values, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite complex square ndarray, optionally of a fixed dimension."""
    a = np.array(values, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValidationError(f"expected dimension {dim}, got {a.shape[0]}")
    if a.shape[0] > DIMENSION_CAP:
        raise ValidationError(f"dimension {a.shape[0]} exceeds cap {DIMENSION_CAP}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def hermiticity_defect(a: np.ndarray) -> float:
    """Max-entry deviation from A = A^dagger."""
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


@dataclass(frozen=True)
class HermitianOperator:
    """A dense Hermitian matrix with a cached eigendecomposition.

    Inputs within 1e-12 of Hermitian (max-entry norm) are symmetrized to
    (A + A^dagger)/2; anything farther is rejected rather than silently
    repaired.
    """

    matrix: np.ndarray

    def __post_init__(self):
        a = as_square_matrix(self.matrix)
        defect = hermiticity_defect(a)
        if defect > HERMITICITY_ATOL:
            raise ValidationError(
                f"matrix is not Hermitian: max-entry defect {defect:.3e} > {HERMITICITY_ATOL:g}"
            )
        object.__setattr__(self, "matrix", _freeze((a + a.conj().T) / 2))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues in ascending order and the matching unitary of eigenvectors."""
        w, v = np.linalg.eigh(self.matrix)
        return _freeze(w), _freeze(v)

    @cached_property
    def spectral_norm(self) -> float:
        w, _ = self.eigensystem
        return float(np.max(np.abs(w))) if w.size else 0.0


def eig(h: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvector matrix of a Hermitian operator."""
    return h.eigensystem


def matrix_function(h: HermitianOperator, f: Callable[[float], complex]) -> np.ndarray:
    """Apply a scalar function to a Hermitian operator through its spectrum.

    Returns V diag(f(E)) V^dagger. Raises SingularityError if f is undefined
    or non-finite at any eigenvalue (for example 1/x on a singular operator).
    """
    w, v = h.eigensystem
    values = np.empty(len(w), dtype=complex)
    for i, x in enumerate(w):
        try:
            values[i] = complex(f(float(x)))
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise SingularityError(f"function undefined at eigenvalue {x!r}: {exc}") from exc
    if not np.all(np.isfinite(values)):
        bad = w[~np.isfinite(values)]
        raise SingularityError(f"function non-finite at eigenvalues {bad}")
    return (v * values) @ v.conj().T


def spectral_projector(h: HermitianOperator, eigenvalue: float, atol: float = 1e-8) -> np.ndarray:
    """Orthogonal projector onto the eigenspace of the eigenvalues within atol."""
    w, v = h.eigensystem
    cols = v[:, np.abs(w - eigenvalue) <= atol]
    if cols.shape[1] == 0:
        raise ValidationError(f"no eigenvalue within {atol:g} of {eigenvalue}")
    return cols @ cols.conj().T


@dataclass(frozen=True)
class StateVector:
    """A unit-norm complex vector. Unnormalized data travels as raw arrays."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if a.size == 0:
            raise ValidationError("empty state vector")
        if not np.all(np.isfinite(a)):
            raise ValidationError("state has non-finite amplitudes")
        norm = float(np.linalg.norm(a))
        if abs(norm - 1.0) > STATE_NORM_ATOL:
            raise ValidationError(f"state norm {norm!r} deviates from 1 beyond {STATE_NORM_ATOL:g}")
        object.__setattr__(self, "amplitudes", _freeze(a))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


def normalized_state(raw: np.ndarray) -> tuple[StateVector, float]:
    """Split a raw vector into (unit state, Euclidean norm)."""
    raw = np.asarray(raw, dtype=complex).reshape(-1)
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        raise ValidationError("cannot normalize the zero vector")
    return StateVector(raw / norm), norm


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        a = as_square_matrix(self.matrix)
        if hermiticity_defect(a) > HERMITICITY_ATOL:
            raise ValidationError("density matrix is not Hermitian within tolerance")
        a = (a + a.conj().T) / 2
        tr = float(np.trace(a).real)
        if abs(tr - 1.0) > DENSITY_ATOL * max(1, a.shape[0]):
            raise ValidationError(f"density matrix trace {tr!r} deviates from 1")
        w = np.linalg.eigvalsh(a)
        if float(w.min()) < -DENSITY_ATOL:
            raise ValidationError(f"density matrix has negative eigenvalue {w.min():.3e}")
        object.__setattr__(self, "matrix", _freeze(a))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def pure_density(state: StateVector) -> DensityMatrix:
    a = state.amplitudes
    return DensityMatrix(np.outer(a, a.conj()))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of a - b; lies in [0, 1]."""
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    w = np.linalg.eigvalsh(a.matrix - b.matrix)
    value = 0.5 * float(np.sum(np.abs(w)))
    return min(max(value, 0.0), 1.0)


def reduced_density(vector: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Partial trace of a pure bipartite state over the discarded factor.

    `vector` has length dims[0]*dims[1] with the first factor major; keep is
    0 or 1 for which subsystem survives.
    """
    d0, d1 = dims
    psi = np.asarray(vector, dtype=complex).reshape(d0, d1)
    if keep == 0:
        return psi @ psi.conj().T
    if keep == 1:
        return psi.T @ psi.conj()
    raise ValidationError("keep must be 0 or 1")


# ---------------------------------------------------------------------------
# JSON wire format: {"dim": n, "re": [...], "im": [...]} in row-major order.
# Double-precision values round-trip exactly (json uses shortest repr).

def matrix_to_json(a: np.ndarray) -> dict:
    a = as_square_matrix(a)
    return {
        "dim": int(a.shape[0]),
        "re": [float(x) for x in a.real.reshape(-1)],
        "im": [float(x) for x in a.imag.reshape(-1)],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != (dim * dim,) or im.shape != (dim * dim,):
        raise ValidationError("matrix JSON entry count does not match dim*dim")
    return as_square_matrix((re + 1j * im).reshape(dim, dim))


def state_to_json(vec: np.ndarray) -> dict:
    a = np.asarray(vec, dtype=complex).reshape(-1)
    return {
        "dim": int(a.shape[0]),
        "re": [float(x) for x in a.real],
        "im": [float(x) for x in a.imag],
    }


def state_from_json(obj: dict) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed state JSON: {exc}") from exc
    if re.shape != (dim,) or im.shape != (dim,):
        raise ValidationError("state JSON entry count does not match dim")
    return re + 1j * im
