"""Pumping channels: Kraus form, measurement plus feedback, and coherent ancilla circuits.

Full-space operators act on H_c (x) H_Q with the ancilla qubit leftmost and
register qubit 1 next, so gates between ancilla and qubit 1 embed as
``tensor(gate_4x4, I)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qmath
from .errors import InconsistencyError, MalformedInputError
from .qmath import DERIVED_TOL, I2, P0, P1, SX, STRUCT_TOL, dagger, tensor
from .subspaces import Subspace, bit_mask

IN_S = 0
NOT_IN_S = 1


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(m, dtype=complex) for m in self.operators)
        if not ops:
            raise MalformedInputError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(m.shape != (d, d) for m in ops):
            raise MalformedInputError("Kraus operators must be square with a common dimension")
        object.__setattr__(self, "operators", ops)
        res = self.completeness_residual()
        if res > DERIVED_TOL:
            raise InconsistencyError(f"Kraus completeness violated by {res:.3e}")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def completeness_residual(self) -> float:
        s = sum(dagger(m) @ m for m in self.operators)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise MalformedInputError(f"state shape {rho.shape} does not match channel dim {self.dim}")
        return sum(m @ rho @ dagger(m) for m in self.operators)

    __call__ = apply

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Composition: apply ``self`` first, then ``other``."""
        return KrausChannel(tuple(b @ a for a in self.operators for b in other.operators))


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    outcome_index: int
    probability: float
    posterior: np.ndarray | None


def canonical_cnots(num_qubits: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(C_in, C_out) between the ancilla and register qubit 1, identity elsewhere.

    C_out flips the ancilla when qubit 1 is |1>; C_in flips qubit 1 when the
    ancilla is |0>.
    """
    if num_qubits < 1:
        raise MalformedInputError("num_qubits must be >= 1")
    c_out = tensor(I2, P0) + tensor(SX, P1)
    c_in = tensor(P1, I2) + tensor(P0, SX)
    rest = np.eye(1 << (num_qubits - 1), dtype=complex)
    return tensor(c_in, rest), tensor(c_out, rest)


def perp_residual(s: Subspace, u_perp: np.ndarray) -> float:
    """max |U_perp (I - P) U_perp^dag - P| for the projector P of ``s``."""
    p = s.projector
    q = np.eye(s.ambient_dim) - p
    return float(np.max(np.abs(u_perp @ q @ dagger(u_perp) - p)))


def u_perp(s: Subspace, pairing=None) -> np.ndarray:
    """Unitary swapping S^perp and S.

    Default: the involution exchanging complement[:, i] with frame[:, i].
    ``pairing`` may be a permutation of range(dim S) (complement[:, i] goes to
    frame[:, pairing[i]]) or any dim-S unitary G, giving F G C^dag + C G^dag F^dag.
    """
    d = s.ambient_dim
    if 2 * s.dim != d:
        raise MalformedInputError(f"subspace dimension {s.dim} is not half of {d}")
    f = s.frame
    c = s.complement_frame()
    if pairing is None:
        g = np.eye(s.dim, dtype=complex)
    else:
        pairing = np.asarray(pairing)
        if pairing.ndim == 1:
            if sorted(pairing.tolist()) != list(range(s.dim)):
                raise MalformedInputError("pairing is not a permutation")
            g = np.zeros((s.dim, s.dim), dtype=complex)
            g[pairing, np.arange(s.dim)] = 1.0
        else:
            g = pairing.astype(complex)
            if g.shape != (s.dim, s.dim) or not qmath.is_unitary(g, DERIVED_TOL):
                raise MalformedInputError("pairing matrix must be a unitary on S")
    return f @ g @ dagger(c) + c @ dagger(g) @ dagger(f)


def pumping_channel(s: Subspace, u_perp_op: np.ndarray) -> KrausChannel:
    """E_S(rho) = P rho P + U_perp P' rho P' U_perp^dag with P' = I - P."""
    u_perp_op = np.asarray(u_perp_op, dtype=complex)
    if u_perp_op.shape != (s.ambient_dim, s.ambient_dim):
        raise MalformedInputError("U_perp dimension does not match the subspace")
    res = perp_residual(s, u_perp_op)
    if res > DERIVED_TOL:
        raise MalformedInputError(f"U_perp does not map S^perp onto S (residual {res:.3e})")
    p = s.projector
    q = np.eye(s.ambient_dim) - p
    return KrausChannel((p, u_perp_op @ q))


def _check_probability(p: float) -> float:
    if p < -STRUCT_TOL or p > 1 + STRUCT_TOL:
        raise InconsistencyError(f"outcome probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def measurement_branches(rho: np.ndarray, s: Subspace, u_perp_op: np.ndarray,
                         zero_tol: float = 1e-14) -> list[MeasurementRecord]:
    """Both outcomes of measuring {P, I-P} followed by the feedback U_perp on 'not in S'."""
    ops = pumping_channel(s, u_perp_op).operators
    out = []
    for k, m in enumerate(ops):
        unnorm = m @ rho @ dagger(m)
        p = _check_probability(float(np.real(np.trace(unnorm))))
        out.append(MeasurementRecord(k, p, unnorm / p if p > zero_tol else None))
    return out


def measurement_feedback_step(rho: np.ndarray, s: Subspace, u_perp_op: np.ndarray,
                              seed=None) -> MeasurementRecord:
    """Sample one measurement-plus-feedback cycle; ``seed`` may be an int or a Generator."""
    rng = np.random.default_rng(seed)
    branches = measurement_branches(rho, s, u_perp_op)
    k = IN_S if rng.random() < branches[IN_S].probability else NOT_IN_S
    if branches[k].posterior is None:
        k = 1 - k
    return branches[k]


def u_tot(u_psi: np.ndarray, c_in: np.ndarray, c_out: np.ndarray,
          tol: float = DERIVED_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Net unitary U_psi C_in C_out U_psi^dag of one control step and the U_perp it induces.

    Checks the block form (|1><1| (x) I + |0><0| (x) U_perp)(I (x) P_S + X (x) P_S^perp)
    with S = U_psi range(Pi^(1)).
    """
    u_psi = np.asarray(u_psi, dtype=complex)
    d = u_psi.shape[0]
    if c_in.shape != (2 * d, 2 * d) or c_out.shape != (2 * d, 2 * d):
        raise MalformedInputError("gate dimensions do not match the register")
    big = tensor(I2, u_psi)
    total = big @ c_in @ c_out @ dagger(big)
    # blocks <a|U|b> on the ancilla
    b00, b01 = total[:d, :d], total[:d, d:]
    up = b00 + b01
    n = qmath.num_qubits_of(d)
    p_s = u_psi @ np.diag(bit_mask(1, n).astype(complex)) @ dagger(u_psi)
    q_s = np.eye(d) - p_s
    expected = (tensor(P1, np.eye(d)) + tensor(P0, up)) @ (tensor(I2, p_s) + tensor(SX, q_s))
    if np.max(np.abs(total - expected)) > tol or not qmath.is_unitary(up, tol):
        raise InconsistencyError("U_tot does not have the conditional block structure")
    return total, up


@dataclass(frozen=True, eq=False)
class GeneralizedGatePair:
    """Entangling gates C~_in, C~_out of the flexible family, with their pieces.

    u_perp here acts in the computational frame: it maps the register
    subspace with qubit 1 = |1> onto qubit 1 = |0>.
    """

    c_in_tilde: np.ndarray
    c_out_tilde: np.ndarray
    d_c: np.ndarray
    o_c: np.ndarray
    w: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    u_perp: np.ndarray

    @property
    def register_dim(self) -> int:
        return self.u1.shape[0]

    def compensated(self) -> tuple[np.ndarray, np.ndarray]:
        """(C_in, C_out) with the register unitaries undone by local control."""
        e = lambda a: tensor(I2, a)  # noqa: E731
        c_out = e(dagger(self.u1)) @ self.c_out_tilde @ e(dagger(self.u2))
        c_in = e(dagger(self.v1)) @ self.c_in_tilde @ e(dagger(self.v2))
        return c_in, c_out


def _first_qubit_projectors(d: int) -> tuple[np.ndarray, np.ndarray]:
    n = qmath.num_qubits_of(d)
    m = bit_mask(1, n).astype(complex)
    return np.diag(m), np.diag(1 - m)


def build_generalized(d_c, o_c, w, u1, u2, v1, v2, u_perp_op) -> GeneralizedGatePair:
    """Assemble C~_out = (I(x)U1) W (D_c(x)Pi_0 + O_c(x)Pi_1)(I(x)U2) and
    C~_in = (I(x)V1)(|1><1|(x)I + |0><0|(x)U_perp) W^dag (I(x)V2)."""
    d_c, o_c, w, u1, u2, v1, v2, up = (np.asarray(a, dtype=complex)
                                       for a in (d_c, o_c, w, u1, u2, v1, v2, u_perp_op))
    d = u1.shape[0]
    qmath.num_qubits_of(d)
    for name, a, dim in (("D_c", d_c, 2), ("O_c", o_c, 2), ("W", w, 2 * d), ("U1", u1, d),
                         ("U2", u2, d), ("V1", v1, d), ("V2", v2, d), ("U_perp", up, d)):
        if a.shape != (dim, dim):
            raise MalformedInputError(f"{name} has shape {a.shape}, expected {(dim, dim)}")
        if not qmath.is_unitary(a, DERIVED_TOL):
            raise MalformedInputError(f"{name} is not unitary")
    if abs(d_c[0, 1]) > DERIVED_TOL or abs(d_c[1, 0]) > DERIVED_TOL:
        raise MalformedInputError("D_c is not diagonal")
    if abs(o_c[0, 0]) > DERIVED_TOL or abs(o_c[1, 1]) > DERIVED_TOL:
        raise MalformedInputError("O_c is not antidiagonal")
    pi0, pi1 = _first_qubit_projectors(d)
    if np.max(np.abs(up @ pi1 @ dagger(up) - pi0)) > DERIVED_TOL:
        raise MalformedInputError("U_perp does not map the qubit-1 = |1> subspace onto |0>")
    e = lambda a: tensor(I2, a)  # noqa: E731
    c_out = e(u1) @ w @ (tensor(d_c, pi0) + tensor(o_c, pi1)) @ e(u2)
    c_in = e(v1) @ (tensor(P1, np.eye(d)) + tensor(P0, up)) @ dagger(w) @ e(v2)
    return GeneralizedGatePair(c_in, c_out, d_c, o_c, w, u1, u2, v1, v2, up)


def random_generalized(num_qubits: int, seed=None) -> GeneralizedGatePair:
    """Random member of the family: random phases, W, register unitaries and U_perp."""
    rng = np.random.default_rng(seed)
    d = 1 << num_qubits
    ph = np.exp(2j * np.pi * rng.random(4))
    d_c = np.diag(ph[:2])
    o_c = np.array([[0, ph[2]], [ph[3], 0]])
    r = lambda dim: qmath.random_unitary(dim, rng)  # noqa: E731
    half = d // 2
    up = tensor(np.array([[0, 1], [0, 0]], dtype=complex), r(half)) \
        + tensor(np.array([[0, 0], [1, 0]], dtype=complex), r(half))
    return build_generalized(d_c, o_c, r(2 * d), r(d), r(d), r(d), r(d), up)


def coherent_step(rho: np.ndarray, u_psi: np.ndarray, gates: GeneralizedGatePair | None = None,
                  compensate: bool = True) -> np.ndarray:
    """One coherent control step: ancilla in |1>, U_psi^dag, C_out, C_in, U_psi, trace ancilla."""
    rho = np.asarray(rho, dtype=complex)
    u_psi = np.asarray(u_psi, dtype=complex)
    d = rho.shape[0]
    if u_psi.shape != (d, d):
        raise MalformedInputError("U_psi does not match the state dimension")
    n = qmath.num_qubits_of(d)
    if gates is None:
        c_in, c_out = canonical_cnots(n)
    elif isinstance(gates, GeneralizedGatePair):
        if gates.register_dim != d:
            raise MalformedInputError("generalized gates act on a different register")
        c_in, c_out = gates.compensated() if compensate else (gates.c_in_tilde, gates.c_out_tilde)
    else:
        raise MalformedInputError(f"unsupported gates {type(gates).__name__}")
    big = tensor(I2, u_psi)
    total = big @ c_in @ c_out @ dagger(big)
    joint = total @ tensor(P1, rho) @ dagger(total)
    return qmath.partial_trace_ancilla(joint)


def commutation_residual(a: np.ndarray, p: np.ndarray) -> float:
    return float(np.max(np.abs(a @ p - p @ a)))


def identity_action_residual(v: np.ndarray, p: np.ndarray) -> float:
    """Distance of V restricted to range(P) from a unit phase times the identity."""
    tr = np.real(np.trace(p))
    if tr < 0.5:
        return 0.0
    c = np.trace(p @ v @ p) / tr
    if abs(c) < 1e-15:
        return float(np.max(np.abs(v @ p - p)))
    c = c / abs(c)
    return float(np.max(np.abs(v @ p - c * p)))


def compensation_free(v1: np.ndarray, projectors: Sequence[np.ndarray],
                      tol: float = DERIVED_TOL) -> list[bool]:
    """Per projector, whether V1~ both commutes with it and acts on its range as
    the identity up to one global phase (so V1~ needs no compensation there)."""
    v1 = np.asarray(v1, dtype=complex)
    flags = []
    for p in projectors:
        p = np.asarray(p, dtype=complex)
        if p.shape != v1.shape:
            raise MalformedInputError(f"projector shape {p.shape} does not match V1 {v1.shape}")
        flags.append(commutation_residual(v1, p) <= tol and identity_action_residual(v1, p) <= tol)
    return flags


def compensation_needed(v1: np.ndarray, projectors: Sequence[np.ndarray],
                        tol: float = DERIVED_TOL) -> list[bool]:
    """Negation of :func:`compensation_free`: True where V1~ must be compensated."""
    return [not ok for ok in compensation_free(v1, projectors, tol)]
