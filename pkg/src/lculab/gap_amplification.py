"""Gap amplification: the square-root Hamiltonian on an enlarged space.

Given H presented as a positive combination of projectors, couple each term to
one ancilla level so that the enlarged operator squares back to H on the
ancilla-0 sector. Eigenvalue gaps of size g in H become sqrt(g)-size gaps of
the enlarged operator, which is what makes short evolution times sufficient
downstream. Also houses the closed-form gate-count model for simulating the
enlarged evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import DEFAULT_CONSTANTS, Constants
from .errors import ValidationError
from .operators import HermitianOperator, as_square_matrix, hermiticity_defect

PROJECTOR_ATOL = 1e-10
UNITARY_ATOL = 1e-10

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def unitarity_defect(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


@dataclass(frozen=True)
class ProjectorDecomposition:
    """Positive weights alpha_k attached to orthogonal projectors, summing to a PSD operator."""

    dim: int
    terms: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        checked = []
        for i, (alpha, proj) in enumerate(self.terms):
            if not (alpha > 0 and math.isfinite(alpha)):
                raise ValidationError(f"term {i}: weight must be positive, got {alpha!r}")
            p = as_square_matrix(proj, self.dim)
            if hermiticity_defect(p) > PROJECTOR_ATOL:
                raise ValidationError(f"term {i}: projector is not Hermitian")
            if np.max(np.abs(p @ p - p)) > PROJECTOR_ATOL:
                raise ValidationError(f"term {i}: matrix is not idempotent")
            p = (p + p.conj().T) / 2
            p.flags.writeable = False
            checked.append((float(alpha), p))
        object.__setattr__(self, "terms", tuple(checked))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def sum_matrix(self) -> np.ndarray:
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for alpha, proj in self.terms:
            total += alpha * proj
        return total

    def sum_sqrt_weights(self) -> float:
        return sum(math.sqrt(alpha) for alpha, _ in self.terms)


@dataclass(frozen=True)
class UnitaryDecomposition:
    """Weighted sum of unitaries. With involutory=True every term must square to 1."""

    dim: int
    terms: tuple[tuple[float, np.ndarray], ...]
    involutory: bool = True

    def __post_init__(self):
        checked = []
        eye = np.eye(self.dim)
        for i, (alpha, u) in enumerate(self.terms):
            if not (alpha > 0 and math.isfinite(alpha)):
                raise ValidationError(f"term {i}: weight must be positive, got {alpha!r}")
            m = as_square_matrix(u, self.dim)
            if unitarity_defect(m) > UNITARY_ATOL:
                raise ValidationError(f"term {i}: matrix is not unitary")
            if self.involutory and np.max(np.abs(m @ m - eye)) > UNITARY_ATOL:
                raise ValidationError(f"term {i}: unitary is not involutory")
            m.flags.writeable = False
            checked.append((float(alpha), m))
        object.__setattr__(self, "terms", tuple(checked))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def weighted_sum(self) -> np.ndarray:
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for alpha, u in self.terms:
            total += alpha * u
        return total

    def one_half_sum(self) -> np.ndarray:
        """The operator (1/2) sum_k alpha_k U_k presented by this decomposition."""
        return self.weighted_sum() / 2


def parse_pauli_lines(text: str) -> UnitaryDecomposition:
    """Parse lines of "coeff PAULI_STRING" (e.g. "0.5 XZI") into a reflection decomposition.

    The parsed operator is (1/2) sum alpha_k U_k = sum coeff_l P_l, so alpha_k
    carries a factor 2 and signs are absorbed into the unitaries.
    """
    terms = []
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"line {lineno}: expected 'coeff PAULI_STRING', got {raw!r}")
        try:
            coeff = float(parts[0])
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
        word = parts[1].upper()
        if any(c not in _PAULI for c in word):
            raise ValidationError(f"line {lineno}: bad Pauli string {parts[1]!r}")
        if coeff == 0.0:
            continue
        mat = np.array([[1.0 + 0j]])
        for c in word:
            mat = np.kron(mat, _PAULI[c])
        if dim is None:
            dim = mat.shape[0]
        elif mat.shape[0] != dim:
            raise ValidationError(f"line {lineno}: inconsistent qubit count")
        terms.append((2 * abs(coeff), math.copysign(1.0, coeff) * mat))
    if not terms:
        raise ValidationError("no Pauli terms found")
    return UnitaryDecomposition(dim=dim, terms=tuple(terms), involutory=True)


def projectors_from_unitaries(u: UnitaryDecomposition) -> tuple[ProjectorDecomposition, float]:
    """Rescale a reflection decomposition into projectors Pi_k = (U_k + 1)/2.

    Returns the projector decomposition together with the discarded identity
    offset sum(alpha_k)/2, so that (1/2) sum alpha_k U_k = sum alpha_k Pi_k - offset.
    """
    if not u.involutory:
        raise ValidationError("projector rescaling requires involutory unitaries")
    eye = np.eye(u.dim)
    terms = tuple((alpha, (mat + eye) / 2) for alpha, mat in u.terms)
    offset = sum(alpha for alpha, _ in u.terms) / 2
    return ProjectorDecomposition(dim=u.dim, terms=terms), offset


def psd_split(matrix: np.ndarray, tol: float = 1e-12) -> ProjectorDecomposition:
    """Canonical rank-1 split of a PSD matrix: eigenvectors as projectors, eigenvalues as weights."""
    h = HermitianOperator(matrix)
    w, v = h.eigensystem
    if float(w.min()) < -1e-10:
        raise ValidationError(f"matrix is not PSD: min eigenvalue {w.min():.3e}")
    terms = []
    for i in range(h.dim):
        if w[i] > tol:
            col = v[:, i : i + 1]
            terms.append((float(w[i]), col @ col.conj().T))
    return ProjectorDecomposition(dim=h.dim, terms=tuple(terms))


@dataclass(frozen=True)
class GapAmplifiedHamiltonian:
    """The enlarged operator sum_k B_k (x) (|k><0| + |0><k|) with B_k = sqrt(alpha_k) Pi_k.

    Indexing is system-major: basis index = system_index * ancilla_dim + ancilla_index.
    `source` records the sector Hamiltonian's projector presentation when one exists.
    """

    system_dim: int
    ancilla_dim: int
    operator: HermitianOperator
    source: ProjectorDecomposition | None = None

    @property
    def dim(self) -> int:
        return self.system_dim * self.ancilla_dim

    def sector_indices(self) -> np.ndarray:
        return np.arange(self.system_dim) * self.ancilla_dim

    def embed_sector_state(self, phi: np.ndarray) -> np.ndarray:
        """Lift a system vector into the ancilla-0 sector of the enlarged space."""
        phi = np.asarray(phi, dtype=complex).reshape(-1)
        if phi.shape[0] != self.system_dim:
            raise ValidationError("system dimension mismatch")
        out = np.zeros(self.dim, dtype=complex)
        out[self.sector_indices()] = phi
        return out

    def sector_block(self, mat: np.ndarray) -> np.ndarray:
        idx = self.sector_indices()
        return mat[np.ix_(idx, idx)]


def _ancilla_coupler(k: int, ancilla_dim: int) -> np.ndarray:
    a = np.zeros((ancilla_dim, ancilla_dim))
    a[k, 0] = a[0, k] = 1.0
    return a


def assemble_gap_amplified(
    blocks: list[np.ndarray],
    system_dim: int,
    source: ProjectorDecomposition | None = None,
) -> GapAmplifiedHamiltonian:
    """Couple each Hermitian block to its own ancilla level; block k contributes
    block (x) (|k><0| + |0><k|) for k = 1..len(blocks)."""
    ancilla_dim = len(blocks) + 1
    total = np.zeros((system_dim * ancilla_dim,) * 2, dtype=complex)
    for k, block in enumerate(blocks, start=1):
        total += np.kron(as_square_matrix(block, system_dim), _ancilla_coupler(k, ancilla_dim))
    return GapAmplifiedHamiltonian(
        system_dim=system_dim,
        ancilla_dim=ancilla_dim,
        operator=HermitianOperator(total),
        source=source,
    )


def build_tilde_h(p: ProjectorDecomposition) -> GapAmplifiedHamiltonian:
    """Gap-amplify a projector decomposition: blocks sqrt(alpha_k) Pi_k, one ancilla level each."""
    blocks = [math.sqrt(alpha) * proj for alpha, proj in p.terms]
    return assemble_gap_amplified(blocks, p.dim, source=p)


def tilde_h_unitary_terms(g: GapAmplifiedHamiltonian) -> UnitaryDecomposition:
    """Decompose the enlarged operator as a positive combination of 2K unitaries.

    Each projector contributes a pair of ancilla rotations
    exp(-+ i(pi/2)(|k><0| + |0><k|)) acting where the projector acts (identity on
    its complement), with the +-i phases folded into the unitaries so all
    weights stay positive at sqrt(alpha_k)/2 each. The weighted sum equals the
    enlarged operator exactly.
    """
    if g.source is None:
        raise ValidationError("unitary terms require a projector presentation")
    p = g.source
    ancilla_dim = g.ancilla_dim
    eye_sys = np.eye(p.dim)
    eye_anc = np.eye(ancilla_dim)
    terms: list[tuple[float, np.ndarray]] = []
    for k, (alpha, proj) in enumerate(p.terms, start=1):
        coupler = _ancilla_coupler(k, ancilla_dim)
        support = np.zeros((ancilla_dim, ancilla_dim))
        support[0, 0] = support[k, k] = 1.0
        # exp(-+ i(pi/2) coupler) = (1 - support) -+ i * coupler on the ancilla
        rot_minus = (eye_anc - support) - 1j * coupler
        rot_plus = (eye_anc - support) + 1j * coupler
        comp = eye_sys - proj
        u_minus = 1j * (np.kron(proj, rot_minus) + np.kron(comp, eye_anc))
        u_plus = -1j * (np.kron(proj, rot_plus) + np.kron(comp, eye_anc))
        w = math.sqrt(alpha) / 2
        terms.append((w, u_minus))
        terms.append((w, u_plus))
    return UnitaryDecomposition(dim=g.dim, terms=tuple(terms), involutory=False)


def exact_evolution(g: GapAmplifiedHamiltonian, t: float) -> np.ndarray:
    """exp(-i t H~) through the cached eigendecomposition; exact up to roundoff."""
    if not math.isfinite(t):
        raise ValidationError("evolution time must be finite")
    w, v = g.operator.eigensystem
    return (v * np.exp(-1j * t * w)) @ v.conj().T


# ---------------------------------------------------------------------------
# Closed-form cost model for simulating the enlarged evolution.

@dataclass(frozen=True)
class SimulationCostModel:
    """Inputs of the gate-count formula for one approximate evolution.

    tau is |t| times the sum of decomposition weights. For the construction
    above the weight sum equals sum_k sqrt(alpha_k) exactly, so the two tau
    conventions coincide; `tau_source` records which one produced the value.
    """

    tau: float
    epsilon: float
    k_terms: int = 1
    unitary_gate_cost: float = 1.0
    constants: Constants = field(default=DEFAULT_CONSTANTS)
    tau_source: str = "weight-sum"

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValidationError(f"tau must be positive, got {self.tau!r}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValidationError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.k_terms < 1:
            raise ValidationError("k_terms must be at least 1")
        if self.unitary_gate_cost <= 0:
            raise ValidationError("unitary_gate_cost must be positive")


def log_over_loglog(ratio: float) -> float:
    """ln(r)/lnln(r) with the lnln factor clamped at 1 for r <= e^e (and ln clamped at 0)."""
    log_r = max(math.log(ratio), 0.0)
    loglog = math.log(log_r) if log_r > 1.0 else 0.0
    return log_r / max(loglog, 1.0)


def simulation_query_cost(m: SimulationCostModel) -> tuple[float, float, float]:
    """Queries, additional gates, and total gates for one simulated evolution.

    queries ~ tau * ln(tau/eps)/lnln(tau/eps), extra gates carry a factor K,
    and the total carries (ln(K) C_U + K).
    """
    factor = log_over_loglog(m.tau / m.epsilon)
    c = m.constants
    queries = c.query_cost_constant * m.tau * factor
    extra_gates = c.gate_cost_constant * m.k_terms * m.tau * factor
    total = (
        c.total_cost_constant
        * (math.log(m.k_terms) * m.unitary_gate_cost + m.k_terms)
        * m.tau
        * factor
    )
    return queries, extra_gates, total


def evolution_tau(g: GapAmplifiedHamiltonian, t: float, source: str = "weight-sum") -> float:
    """tau for evolving the enlarged operator for time t under either convention."""
    if g.source is None:
        raise ValidationError("tau requires a projector presentation")
    if source not in ("weight-sum", "sqrt-alpha"):
        raise ValidationError(f"unknown tau source {source!r}")
    # weight-sum: sum of unitary-decomposition weights (2K terms of sqrt(alpha)/2 each);
    # sqrt-alpha: sum_k sqrt(alpha_k). They agree identically for this construction.
    return abs(t) * g.source.sum_sqrt_weights()


def decomposition_to_json(p: ProjectorDecomposition) -> dict:
    from .operators import matrix_to_json

    return {
        "dim": p.dim,
        "terms": [
            {"alpha": alpha, "projector": matrix_to_json(proj)} for alpha, proj in p.terms
        ],
    }


def decomposition_from_json(obj: dict) -> ProjectorDecomposition:
    from .operators import matrix_from_json

    try:
        dim = int(obj["dim"])
        terms = tuple(
            (float(term["alpha"]), matrix_from_json(term["projector"])) for term in obj["terms"]
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed decomposition JSON: {exc}") from exc
    return ProjectorDecomposition(dim=dim, terms=terms)
