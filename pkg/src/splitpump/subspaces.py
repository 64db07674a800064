"""Splitting-subspace decompositions of a pure target state.

A target |psi> on N qubits is the unique (up to phase) unit vector in the
intersection of N half-dimensional subspaces S_1..S_N.  Given any unitary
U_psi whose first column is |psi>, S_k is U_psi applied to the span of
standard basis vectors whose k-th bit (counting from the left, 1-based) is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qmath
from .errors import InconsistencyError, MalformedInputError
from .qmath import DERIVED_TOL, PauliString, dagger

RANK_TOL = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace given by an orthonormal frame (columns).

    ``complement`` optionally carries an orthonormal frame of the orthogonal
    complement, column-paired with ``frame``; the default U_perp in
    :mod:`splitpump.channels` swaps frame[:, i] with complement[:, i].
    """

    frame: np.ndarray
    complement: np.ndarray | None = None
    _projector: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        frame = np.asarray(self.frame, dtype=complex)
        if frame.ndim == 1:
            frame = frame[:, None]
        if frame.ndim != 2:
            raise MalformedInputError(f"frame must be 2-d, got shape {frame.shape}")
        gram = dagger(frame) @ frame
        if np.max(np.abs(gram - np.eye(frame.shape[1])), initial=0.0) > DERIVED_TOL:
            raise MalformedInputError("frame is not orthonormal")
        object.__setattr__(self, "frame", _readonly(frame))
        if self.complement is not None:
            comp = np.asarray(self.complement, dtype=complex)
            if comp.ndim != 2 or comp.shape[0] != frame.shape[0] \
                    or comp.shape[1] + frame.shape[1] != frame.shape[0]:
                raise MalformedInputError("complement frame has the wrong shape")
            full = np.hstack([frame, comp])
            if np.max(np.abs(dagger(full) @ full - np.eye(full.shape[1]))) > DERIVED_TOL:
                raise MalformedInputError("complement frame is not orthonormal to the frame")
            object.__setattr__(self, "complement", _readonly(comp))
        object.__setattr__(self, "_projector", _readonly(qmath.projector(frame)))

    @classmethod
    def from_projector(cls, p: np.ndarray, tol: float = RANK_TOL) -> "Subspace":
        p = np.asarray(p, dtype=complex)
        w, v = np.linalg.eigh((p + dagger(p)) / 2)
        keep = np.abs(w - 1.0) <= tol
        return cls(v[:, keep][:, ::-1])

    @classmethod
    def from_columns(cls, u: np.ndarray, mask: Sequence[bool]) -> "Subspace":
        """Subspace spanned by the columns of unitary ``u`` selected by ``mask``.

        The unselected columns become the complement frame, in order.
        """
        mask = np.asarray(mask, dtype=bool)
        return cls(u[:, mask], u[:, ~mask])

    @property
    def projector(self) -> np.ndarray:
        return self._projector

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    def complement_frame(self) -> np.ndarray:
        if self.complement is not None:
            return self.complement
        u = qmath.complete_to_unitary(list(self.frame.T), self.ambient_dim)
        return u[:, self.dim:]

    def weight(self, rho: np.ndarray) -> float:
        """tr(P rho): population of ``rho`` inside the subspace."""
        return float(np.real(np.trace(self._projector @ rho)))

    def same_as(self, other: "Subspace", tol: float = DERIVED_TOL) -> bool:
        return bool(np.max(np.abs(self.projector - other.projector)) <= tol)


def bit_mask(k: int, num_qubits: int, value: int = 0) -> np.ndarray:
    """Boolean mask over 2**N indices selecting those whose k-th bit from the left is ``value``."""
    if not 1 <= k <= num_qubits:
        raise MalformedInputError(f"k={k} out of range 1..{num_qubits}")
    idx = np.arange(1 << num_qubits)
    return ((idx >> (num_qubits - k)) & 1) == value


def pi_k_projector(k: int, num_qubits: int) -> Subspace:
    """range(I^(k-1) (x) |0><0| (x) I^(N-k)) in the standard basis."""
    return Subspace.from_columns(np.eye(1 << num_qubits, dtype=complex), bit_mask(k, num_qubits))


def intersect(subspaces: Sequence[Subspace], tol: float = RANK_TOL) -> Subspace:
    """Intersection as the eigenvalue-1 eigenspace of the averaged projector."""
    subspaces = list(subspaces)
    if not subspaces:
        raise MalformedInputError("cannot intersect an empty list of subspaces")
    d = subspaces[0].ambient_dim
    if any(s.ambient_dim != d for s in subspaces):
        raise MalformedInputError("subspaces live in different ambient spaces")
    avg = sum(s.projector for s in subspaces) / len(subspaces)
    return Subspace.from_projector(avg, tol)


def _projector_rank(p: np.ndarray) -> int:
    w = np.linalg.eigvalsh((p + dagger(p)) / 2)
    return int(np.sum(w > 0.5))


@dataclass(frozen=True, eq=False)
class SplittingDecomposition:
    target: np.ndarray
    basis_unitary: np.ndarray
    subspaces: tuple[Subspace, ...]

    @property
    def num_qubits(self) -> int:
        return len(self.subspaces)

    def check(self) -> None:
        n = self.num_qubits
        half = 1 << (n - 1)
        for k, s in enumerate(self.subspaces, start=1):
            if s.dim != half or _projector_rank(s.projector) != half:
                raise InconsistencyError(f"S_{k} has dimension {s.dim}, expected {half}")
        meet = intersect(self.subspaces)
        if meet.dim != 1:
            raise InconsistencyError(f"intersection has dimension {meet.dim}, expected 1")
        overlap = abs(np.vdot(meet.frame[:, 0], self.target))
        if abs(overlap - 1.0) > DERIVED_TOL:
            raise InconsistencyError(f"intersection is not spanned by the target (overlap {overlap})")

    def nested(self, step: int) -> Subspace:
        """Intersection of S_1..S_step, read off the basis unitary."""
        n = self.num_qubits
        if not 1 <= step <= n:
            raise MalformedInputError(f"step {step} out of range 1..{n}")
        idx = np.arange(1 << n)
        mask = (idx >> (n - step)) == 0
        return Subspace.from_columns(self.basis_unitary, mask)


def _decomposition_from_unitary(target: np.ndarray, u: np.ndarray) -> SplittingDecomposition:
    n = qmath.num_qubits_of(u.shape[0])
    subs = tuple(Subspace.from_columns(u, bit_mask(k, n)) for k in range(1, n + 1))
    return SplittingDecomposition(_readonly(target), _readonly(u), subs)


def build_splitting(target: np.ndarray, completion: np.ndarray | None = None,
                    validate: bool = True) -> SplittingDecomposition:
    """Splitting subspaces of ``target`` from a basis completion.

    ``completion`` is any unitary with ``target`` as first column; by default
    the deterministic Gram-Schmidt completion is used.
    """
    psi = qmath.as_ket(target, tol=DERIVED_TOL)
    if completion is None:
        u = qmath.complete_to_unitary([psi], psi.shape[0])
    else:
        u = np.asarray(completion, dtype=complex)
        if u.shape != (psi.shape[0], psi.shape[0]):
            raise MalformedInputError(f"completion has shape {u.shape}")
        if not qmath.is_unitary(u, DERIVED_TOL):
            raise MalformedInputError("completion is not unitary")
        if np.max(np.abs(u[:, 0] - psi)) > DERIVED_TOL:
            raise MalformedInputError("completion's first column is not the target")
    decomp = _decomposition_from_unitary(psi, u)
    if validate:
        decomp.check()
    return decomp


def swap_bits_permutation(num_qubits: int, a: int, b: int) -> np.ndarray:
    """Permutation matrix exchanging bits ``a`` and ``b`` (1-based, from the left) of the index."""
    n = num_qubits
    idx = np.arange(1 << n)
    ba = (idx >> (n - a)) & 1
    bb = (idx >> (n - b)) & 1
    diff = ba ^ bb
    swapped = idx ^ ((diff << (n - a)) | (diff << (n - b)))
    p = np.zeros((1 << n, 1 << n), dtype=complex)
    p[swapped, idx] = 1.0
    return p


def step_reordering(decomp: SplittingDecomposition, step: int) -> np.ndarray:
    """U_psi P_step: maps range(Pi^(1)) onto S_step, so every step can reuse first-qubit gates."""
    n = decomp.num_qubits
    if not 1 <= step <= n:
        raise MalformedInputError(f"step {step} out of range 1..{n}")
    return decomp.basis_unitary @ swap_bits_permutation(n, 1, step)


def _check_generators(generators: Sequence[PauliString]) -> int:
    if not generators:
        raise MalformedInputError("no generators")
    n = generators[0].num_qubits
    if any(g.num_qubits != n for g in generators):
        raise MalformedInputError("generators act on different numbers of qubits")
    if len(generators) != n:
        raise MalformedInputError(f"need {n} generators for {n} qubits, got {len(generators)}")
    for i, g in enumerate(generators):
        for h in generators[i + 1:]:
            if not g.commutes_with(h):
                raise MalformedInputError(f"generators {g} and {h} do not commute")
    if qmath.gf2_rank(np.stack([g.symplectic() for g in generators])) != n:
        raise MalformedInputError("generators are not independent")
    return n


def stabilizer_splitting(generators: Sequence[PauliString]) -> SplittingDecomposition:
    """Splitting from N commuting independent signed Pauli strings.

    S_k is the eigenspace of generator k with its own sign.  Column j of the
    basis unitary is the joint eigenvector whose k-th generator eigenvalue is
    flipped exactly where bit k of j is 1, so column 0 is the stabilizer state.
    """
    generators = [g if isinstance(g, PauliString) else PauliString.parse(g) for g in generators]
    n = _check_generators(generators)
    d = 1 << n
    mats = [g.matrix() for g in generators]
    eye = np.eye(d, dtype=complex)
    cols = []
    for j in range(d):
        p = eye
        for k, m in enumerate(mats, start=1):
            flip = (j >> (n - k)) & 1
            p = p @ ((eye - m) / 2 if flip else (eye + m) / 2)
        w, v = np.linalg.eigh((p + dagger(p)) / 2)
        if not abs(w[-1] - 1.0) <= RANK_TOL or (d > 1 and w[-2] > RANK_TOL):
            raise InconsistencyError(f"joint eigenspace {j} is not one-dimensional")
        cols.append(qmath.normalize_phase(v[:, -1]))
    u = np.stack(cols, axis=1)
    decomp = _decomposition_from_unitary(u[:, 0], u)
    decomp.check()
    return decomp
