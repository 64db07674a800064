"""Dense linear algebra on qubit registers.

States and operators are plain numpy arrays: a ket is a 1-d complex array of
length 2**N, density matrices and unitaries are square 2-d arrays.  Tensor
products follow ``numpy.kron``: the first factor is the slowest-varying index,
so an ancilla written first in ``tensor(anc, reg)`` is the leftmost qubit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import InconsistencyError, MalformedInputError

STRUCT_TOL = 1e-12
DERIVED_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)  # |0><0|
P1 = np.array([[0, 0], [0, 1]], dtype=complex)  # |1><1|

PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


def num_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise MalformedInputError(f"dimension {dim} is not a power of two >= 2")
    return n


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of kets or operators, first factor leftmost."""
    if not factors:
        raise MalformedInputError("tensor needs at least one factor")
    return reduce(np.kron, [np.asarray(f, dtype=complex) for f in factors])


def basis_ket(index: int, num_qubits: int) -> np.ndarray:
    dim = 1 << num_qubits
    if not 0 <= index < dim:
        raise MalformedInputError(f"basis index {index} out of range for {num_qubits} qubits")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def ket_from_bits(bits: str) -> np.ndarray:
    """``ket_from_bits("01")`` is |01>."""
    return basis_ket(int(bits, 2), len(bits))


def as_ket(psi, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a ket: 1-d, power-of-two length, unit norm."""
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1:
        raise MalformedInputError(f"ket must be 1-d, got shape {v.shape}")
    num_qubits_of(v.shape[0])
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise MalformedInputError(f"ket norm {np.linalg.norm(v)!r} differs from 1")
    return v


def as_density(rho, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, PSD and unit trace within ``tol``."""
    r = np.asarray(rho, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise MalformedInputError(f"density matrix must be square, got shape {r.shape}")
    num_qubits_of(r.shape[0])
    if np.max(np.abs(r - dagger(r))) > tol:
        raise MalformedInputError("density matrix is not Hermitian")
    if abs(np.trace(r) - 1.0) > tol:
        raise MalformedInputError(f"density matrix trace {np.trace(r).real!r} differs from 1")
    if np.linalg.eigvalsh(r).min() < -tol:
        raise MalformedInputError("density matrix has a negative eigenvalue")
    return r


def is_unitary(u: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u @ dagger(u) - np.eye(u.shape[0]))) <= tol)


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def maximally_mixed(num_qubits: int) -> np.ndarray:
    d = 1 << num_qubits
    return np.eye(d, dtype=complex) / d


def projector(frame: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of the orthonormal columns of ``frame``."""
    frame = np.asarray(frame, dtype=complex)
    return frame @ dagger(frame)


def partial_trace_ancilla(rho: np.ndarray) -> np.ndarray:
    """Trace out the leftmost qubit of an operator on H_c (x) H_Q."""
    r = np.asarray(rho, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] % 2 or r.shape[0] < 4:
        raise MalformedInputError(f"cannot trace an ancilla out of shape {r.shape}")
    d = r.shape[0] // 2
    return r[:d, :d] + r[d:, d:]


def hermitian_exp(h: np.ndarray, angle: float, prefactor: float = 1.0) -> np.ndarray:
    """exp(-i * prefactor * angle * H) through the eigendecomposition of H."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise MalformedInputError(f"generator must be square, got shape {h.shape}")
    if np.max(np.abs(h - dagger(h)), initial=0.0) > STRUCT_TOL * max(1.0, np.max(np.abs(h))):
        raise MalformedInputError("generator is not Hermitian")
    w, v = np.linalg.eigh((h + dagger(h)) / 2)
    phases = np.exp(-1j * prefactor * angle * w)
    return (v * phases) @ dagger(v)


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """<psi|rho|psi> for a pure target, clamped to [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise MalformedInputError(f"dimension mismatch: rho {rho.shape} vs psi {psi.shape}")
    f = float(np.real(np.vdot(psi, rho @ psi)))
    if f < -STRUCT_TOL or f > 1 + STRUCT_TOL:
        raise InconsistencyError(f"fidelity {f!r} outside [0, 1]")
    return min(max(f, 0.0), 1.0)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def ginibre(dim: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)


def random_density(num_qubits: int, seed=None) -> np.ndarray:
    """Full-rank random state rho = G G^dag / tr(G G^dag), G complex Gaussian."""
    if num_qubits < 1:
        raise MalformedInputError("num_qubits must be >= 1")
    g = ginibre(1 << num_qubits, _rng(seed))
    rho = g @ dagger(g)
    rho = (rho + dagger(rho)) / 2
    return rho / np.trace(rho).real


def random_ket(num_qubits: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    d = 1 << num_qubits
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary (QR of a Ginibre matrix with phase fix)."""
    q, r = np.linalg.qr(ginibre(dim, _rng(seed)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, seed=None) -> np.ndarray:
    """GUE sample rescaled to unit spectral norm."""
    g = ginibre(dim, _rng(seed))
    h = (g + dagger(g)) / 2
    return h / np.max(np.abs(np.linalg.eigvalsh(h)))


def complete_to_unitary(first_columns: Sequence[np.ndarray], dim: int | None = None,
                        skip_tol: float = 1e-8) -> np.ndarray:
    """Extend orthonormal vectors to a unitary whose leading columns are those vectors.

    Missing columns come from Gram-Schmidt (two passes) over the standard
    basis e_0, e_1, ... in order; a candidate whose residual norm falls below
    ``skip_tol`` is skipped.  The result is deterministic.
    """
    cols = [np.asarray(c, dtype=complex).reshape(-1) for c in first_columns]
    if dim is None:
        if not cols:
            raise MalformedInputError("need a dimension or at least one column")
        dim = cols[0].shape[0]
    num_qubits_of(dim)
    if any(c.shape[0] != dim for c in cols):
        raise MalformedInputError("column length differs from dim")
    if len(cols) > dim:
        raise MalformedInputError("more columns than the dimension")
    if cols:
        a = np.stack(cols, axis=1)
        if np.max(np.abs(dagger(a) @ a - np.eye(len(cols)))) > DERIVED_TOL:
            raise MalformedInputError("supplied columns are not orthonormal")
    basis = list(cols)
    for j in range(dim):
        if len(basis) == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[j] = 1.0
        for _ in range(2):
            for b in basis:
                v = v - np.vdot(b, v) * b
        nrm = np.linalg.norm(v)
        if nrm < skip_tol:
            continue
        basis.append(v / nrm)
    if len(basis) != dim:
        raise InconsistencyError("Gram-Schmidt completion ran out of candidates")
    return np.stack(basis, axis=1)


def global_phase(a: np.ndarray, b: np.ndarray) -> complex:
    """Unit phase c making c*b closest to a on b's largest-magnitude entry."""
    a = np.asarray(a)
    b = np.asarray(b)
    i = np.argmax(np.abs(b))
    if abs(b.flat[i]) == 0 or abs(a.flat[i]) == 0:
        return 1.0 + 0j
    c = a.flat[i] / b.flat[i]
    return c / abs(c)


def normalize_phase(a: np.ndarray) -> np.ndarray:
    """Rotate ``a`` so that its largest-magnitude entry is real and positive."""
    a = np.asarray(a, dtype=complex)
    i = np.argmax(np.abs(a))
    if a.flat[i] == 0:
        return a.copy()
    return a * (abs(a.flat[i]) / a.flat[i])


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise deviation between ``a`` and ``b`` after removing one global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise MalformedInputError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - global_phase(a, b) * b)))


@dataclass(frozen=True)
class PauliString:
    """Signed tensor product of single-qubit Paulis, e.g. ``-XX``."""

    letters: str
    sign: int = 1

    def __post_init__(self):
        if not self.letters or any(ch not in PAULI for ch in self.letters):
            raise MalformedInputError(f"bad Pauli letters {self.letters!r}")
        if self.sign not in (1, -1):
            raise MalformedInputError(f"sign must be +1 or -1, got {self.sign!r}")

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        text = text.strip()
        sign = 1
        if text[:1] in "+-":
            sign = -1 if text[0] == "-" else 1
            text = text[1:]
        return cls(text.upper(), sign)

    @classmethod
    def single(cls, letter: str, qubit: int, num_qubits: int, sign: int = 1) -> "PauliString":
        """Operator acting as ``letter`` on ``qubit`` (1-based) and identity elsewhere."""
        if not 1 <= qubit <= num_qubits:
            raise MalformedInputError(f"qubit {qubit} out of range")
        s = ["I"] * num_qubits
        s[qubit - 1] = letter
        return cls("".join(s), sign)

    @property
    def num_qubits(self) -> int:
        return len(self.letters)

    def matrix(self) -> np.ndarray:
        return self.sign * tensor(*(PAULI[ch] for ch in self.letters))

    def symplectic(self) -> np.ndarray:
        """Binary (x|z) vector; the sign is dropped."""
        x = [ch in "XY" for ch in self.letters]
        z = [ch in "ZY" for ch in self.letters]
        return np.array(x + z, dtype=np.uint8)

    def commutes_with(self, other: "PauliString") -> bool:
        if other.num_qubits != self.num_qubits:
            raise MalformedInputError("Pauli strings act on different registers")
        anti = sum(a != "I" and b != "I" and a != b for a, b in zip(self.letters, other.letters))
        return anti % 2 == 0

    def __neg__(self) -> "PauliString":
        return PauliString(self.letters, -self.sign)

    def __str__(self) -> str:
        return ("-" if self.sign < 0 else "+") + self.letters


def gf2_rank(rows: np.ndarray) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    for col in range(m.shape[1]):
        pivot = next((r for r in range(rank, m.shape[0]) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
    return rank
