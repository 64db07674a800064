"""Trapped-ion case study: Molmer-Sorensen gates and Bell/GHZ stabilizer pumping.

The three-ion register is ordered (ancilla c, qubit 1, qubit 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qmath
from .channels import GeneralizedGatePair, KrausChannel, build_generalized, pumping_channel
from .errors import InconsistencyError, MalformedInputError
from .protocol import ProtocolTrace, StepRecord, nested_intersections, stabilize, step_rng
from .qmath import DERIVED_TOL, I2, P0, P1, SX, SY, SZ, PauliString, dagger, tensor
from .subspaces import Subspace, stabilizer_splitting

_S = 1 / np.sqrt(2)
PHASE = np.exp(-1j * np.pi / 8)

BELL = {
    "phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi+": np.array([0, _S, _S, 0], dtype=complex),
    "psi-": np.array([0, _S, -_S, 0], dtype=complex),
}
BELL_ORDER = ("phi+", "psi+", "phi-", "psi-")

# Scalar the source text prints in front of the Bell-basis action of U''_X, U''_Y.
PRINTED_BELL_SCALAR = PHASE / np.sqrt(2)


def bell_basis() -> np.ndarray:
    """Columns |Phi+>, |Psi+>, |Phi->, |Psi->."""
    return np.stack([BELL[k] for k in BELL_ORDER], axis=1)


def collective_spin(pauli: np.ndarray, num_qubits: int) -> np.ndarray:
    """sum_i sigma_i for a single-qubit Pauli ``pauli`` on every ion."""
    return sum(tensor(*[pauli if j == i else I2 for j in range(num_qubits)])
               for i in range(num_qubits))


@dataclass(frozen=True)
class MsGateSpec:
    theta: float
    phi: float = 0.0
    num_qubits: int = 3

    def generator(self) -> np.ndarray:
        s = np.cos(self.phi) * collective_spin(SX, self.num_qubits) \
            + np.sin(self.phi) * collective_spin(SY, self.num_qubits)
        return s @ s


def ms_gate(spec: MsGateSpec | float, phi: float = 0.0, num_qubits: int = 3) -> np.ndarray:
    """exp(-i theta/4 (cos(phi) S_x + sin(phi) S_y)^2) on all ``num_qubits`` ions."""
    if not isinstance(spec, MsGateSpec):
        spec = MsGateSpec(float(spec), phi, num_qubits)
    if spec.num_qubits < 2:
        raise MalformedInputError("an MS gate needs at least two ions")
    return qmath.hermitian_exp(spec.generator(), spec.theta, 0.25)


def sector_projectors(letter: str) -> tuple[np.ndarray, np.ndarray]:
    """(Pi_-1, Pi_+1): eigenprojectors of the two-qubit stabilizer ``letter letter``."""
    p = PauliString(letter * 2).matrix()
    eye = np.eye(4)
    return (eye - p) / 2, (eye + p) / 2


def u_double_prime_x() -> np.ndarray:
    m = -np.ones((4, 4)) + 2 * np.eye(4)
    return 0.5 * PHASE * m


def u_double_prime_y() -> np.ndarray:
    m = np.array([[1, 1, 1, 1], [-1, 1, -1, 1], [-1, -1, 1, 1], [1, -1, -1, 1]])
    return 0.5 * PHASE * m


def _checked(u_prime, c_out, target, name):
    if qmath.phase_distance(target, u_prime @ c_out) > DERIVED_TOL:
        raise InconsistencyError(f"{name}: residual times conditional gate does not rebuild the MS gate")
    return u_prime, c_out


def decompose_ms_x() -> tuple[np.ndarray, np.ndarray]:
    """U_X2(pi/2) = U'_X (I (x) Pi_-1 + X (x) Pi_+1), with U'_X = I (x) U''_X."""
    pm, pp = sector_projectors("X")
    c_out = tensor(I2, pm) + tensor(SX, pp)
    return _checked(tensor(I2, u_double_prime_x()), c_out, ms_gate(np.pi / 2, 0.0, 3), "X")


def decompose_ms_y() -> tuple[np.ndarray, np.ndarray]:
    """U_Y2(pi/2) = U'_Y (Z (x) Pi'_-1 + X (x) Pi'_+1), with U'_Y = Z (x) U''_Y."""
    pm, pp = sector_projectors("Y")
    c_out = tensor(SZ, pm) + tensor(SX, pp)
    return _checked(tensor(SZ, u_double_prime_y()), c_out, ms_gate(np.pi / 2, np.pi / 2, 3), "Y")


def bell_action(u: np.ndarray) -> np.ndarray:
    """Matrix of a two-qubit operator in the ordered Bell basis."""
    b = bell_basis()
    return dagger(b) @ u @ b


def sector_frame(letter: str) -> np.ndarray:
    """Unitary B mapping qubit-1 = |0> onto the -1 sector and qubit-1 = |1> onto the +1 sector."""
    if letter == "X":
        cols = ("phi-", "psi-", "phi+", "psi+")
    elif letter == "Y":
        cols = ("phi+", "psi-", "phi-", "psi+")
    else:
        raise MalformedInputError(f"no sector frame for {letter!r}")
    return np.stack([BELL[k] for k in cols], axis=1)


def ms_generalized_pair(letter: str = "X") -> GeneralizedGatePair:
    """The pi/2 MS gate written as C~_out, paired with the ideal conditional-Z C~_in.

    U1 = U'' B, U2 = B^dag where B is :func:`sector_frame`; for Y the
    ancilla Z of U'_Y becomes W = Z (x) I.
    """
    b = sector_frame(letter)
    u_perp_comp = dagger(b) @ tensor(SZ, I2) @ b
    if letter == "X":
        upp, w, d_c = u_double_prime_x(), np.eye(8, dtype=complex), I2
    else:
        upp, w, d_c = u_double_prime_y(), tensor(SZ, np.eye(4)), SZ
    return build_generalized(d_c, SX, w, upp @ b, dagger(b), b, dagger(b), u_perp_comp)


def conversion_probability(alpha: float) -> float:
    return float(np.sin(alpha) ** 2)


def ideal_cin() -> np.ndarray:
    """|0><0|_c (x) Z_1 + |1><1|_c (x) I on (ancilla, qubit 1)."""
    return tensor(P0, SZ) + tensor(P1, I2)


def experimental_cin(alpha: float) -> np.ndarray:
    """U_Z1(alpha) U_Y(pi/2) exp(i alpha/2 X_c X_1) U_Y(-pi/2) on (ancilla, qubit 1).

    U_Z1(alpha) = exp(i alpha Z_1) and U_Y(t) = exp(-i t/2 (Y_c + Y_1)).
    """
    sy = collective_spin(SY, 2)
    u_y = lambda t: qmath.hermitian_exp(sy, t, 0.5)  # noqa: E731
    u_xx = qmath.hermitian_exp(tensor(SX, SX), -alpha, 0.5)
    u_z = qmath.hermitian_exp(tensor(I2, SZ), -alpha)
    return u_z @ u_y(np.pi / 2) @ u_xx @ u_y(-np.pi / 2)


def compensated_experimental_cin(alpha: float) -> np.ndarray:
    """experimental_cin with its ancilla-|1> block undone on qubit 1 by local control.

    The sequence is block diagonal in the ancilla; multiplying by
    I (x) V2^dag with V2 the |1><1|_c block leaves I on that branch and
    exp(i alpha Z_1) on the |0><0|_c branch.
    """
    c = experimental_cin(alpha)
    if max(np.max(np.abs(c[:2, 2:])), np.max(np.abs(c[2:, :2]))) > DERIVED_TOL:
        raise InconsistencyError("experimental C_in is not block diagonal in the ancilla")
    return c @ tensor(I2, dagger(c[2:, 2:]))


def reduced_channel(gate: np.ndarray, sigma_c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """tr_c[G (sigma_c (x) rho) G^dag]."""
    return qmath.partial_trace_ancilla(gate @ tensor(sigma_c, rho) @ dagger(gate))


def bell_cycle_unitary(letter: str, simplified: bool, cin: np.ndarray | None = None) -> np.ndarray:
    """Unitary of one pumping cycle on (c, q1, q2) before the ancilla reset."""
    ms = ms_gate(np.pi / 2, 0.0 if letter == "X" else np.pi / 2, 3)
    c = tensor(ideal_cin() if cin is None else np.asarray(cin, dtype=complex), I2)
    return c @ ms if simplified else ms @ c @ ms


def cycle_channel(u: np.ndarray) -> KrausChannel:
    """Reduced map with the ancilla in |1> before and discarded after: K_b = <b|U|1>."""
    d = u.shape[0] // 2
    return KrausChannel((u[:d, d:], u[d:, d:]))


def _bell_decomposition():
    return stabilizer_splitting([PauliString("XX", -1), PauliString("YY", -1)])


def bell_pump(rho0, simplified: bool = False, seed=None, mode: str = "coherent",
              cin: np.ndarray | None = None) -> ProtocolTrace:
    """Two-cycle pumping of ``rho0`` into |Psi->: X1X2 cycle, then Y1Y2 cycle.

    Modes: "coherent" traces the ancilla out of the joint state, "kraus"
    applies the cycle's Kraus operators, "trajectory" samples the ancilla
    reset outcome.
    """
    if mode not in ("coherent", "kraus", "trajectory"):
        raise MalformedInputError(f"unknown mode {mode!r}")
    psi = BELL["psi-"]
    rho = qmath.as_density(rho0, tol=1e-10)
    if rho.shape != (4, 4):
        raise MalformedInputError("Bell pumping acts on two qubits")
    nested = nested_intersections(_bell_decomposition().subspaces)
    trace = ProtocolTrace(psi, mode, qmath.fidelity(rho, psi))
    for cycle, letter in enumerate(("X", "Y"), start=1):
        u = bell_cycle_unitary(letter, simplified, cin)
        if mode == "coherent":
            rho = qmath.partial_trace_ancilla(u @ tensor(P1, rho) @ dagger(u))
        elif mode == "kraus":
            rho = cycle_channel(u).apply(rho)
        else:
            rho = _sample_reset(u, rho, step_rng(seed, cycle))
        upto = nested[:cycle]
        trace.steps.append(StepRecord(cycle, rho, qmath.fidelity(rho, psi),
                                      tuple(s.dim for s in upto), tuple(s.weight(rho) for s in upto)))
    return trace


def _sample_reset(u, rho, rng):
    ops = cycle_channel(u).operators
    unnorm = [k @ rho @ dagger(k) for k in ops]
    p0 = min(max(float(np.real(np.trace(unnorm[0]))), 0.0), 1.0)
    b = 0 if rng.random() < p0 else 1
    p = p0 if b == 0 else 1 - p0
    if p <= 1e-14:
        b, p = 1 - b, 1 - p
    return unnorm[b] / p


def ghz_state(n: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[0] = v[-1] = _S
    return v


def ghz_generators(n: int) -> list[PauliString]:
    """+X...X and +Z_i Z_{i+1} for i = 1..n-1."""
    gens = [PauliString("X" * n)]
    for i in range(n - 1):
        gens.append(PauliString("I" * i + "ZZ" + "I" * (n - i - 2)))
    return gens


def ghz_pump(n: int, rho0, seed=None, mode: str = "kraus") -> ProtocolTrace:
    """Stabilizer pumping into the n-qubit GHZ state, one generator per step."""
    if n not in (3, 4):
        raise MalformedInputError("GHZ pumping is provided for 3 or 4 qubits")
    decomp = stabilizer_splitting(ghz_generators(n))
    return stabilize(decomp.target, rho0, mode, seed, decomposition=decomp)


def x_sector_channel() -> KrausChannel:
    """Pumping into the X1X2 = -1 sector with feedback Z_1."""
    pm, _ = sector_projectors("X")
    return pumping_channel(Subspace.from_projector(pm), tensor(SZ, I2))


def verify_ms_report() -> dict:
    """Residuals of every MS decomposition identity plus the Bell-action scalars."""
    ux, cx = decompose_ms_x()
    uy, cy = decompose_ms_y()
    upx, upy = u_double_prime_x(), u_double_prime_y()
    pmx, ppx = sector_projectors("X")
    pmy, ppy = sector_projectors("Y")
    eye4 = np.eye(4)

    def comm(a, p):
        return float(np.max(np.abs(a @ p - p @ a)))

    bx, by = bell_action(upx), bell_action(upy)
    phi_m, psi_m = BELL_ORDER.index("phi-"), BELL_ORDER.index("psi-")
    psi_p = BELL_ORDER.index("psi+")
    return {
        "ms_x_decomposition": qmath.phase_distance(ms_gate(np.pi / 2, 0.0), ux @ cx),
        "ms_y_decomposition": qmath.phase_distance(ms_gate(np.pi / 2, np.pi / 2), uy @ cy),
        "u_pp_x_unitarity": float(np.max(np.abs(upx @ dagger(upx) - eye4))),
        "u_pp_y_unitarity": float(np.max(np.abs(upy @ dagger(upy) - eye4))),
        "u_prime_x_commutes": max(comm(ux, tensor(I2, pmx)), comm(ux, tensor(I2, ppx))),
        "u_prime_y_commutes": max(comm(uy, tensor(I2, pmy)), comm(uy, tensor(I2, ppy))),
        "z1_psi_plus": float(np.max(np.abs(tensor(SZ, I2) @ BELL["psi+"] - BELL["psi-"]))),
        "bell_scalar_x_psi_minus": complex(bx[psi_m, psi_m]),
        "bell_scalar_y_phi_minus_to_psi_plus": complex(by[psi_p, phi_m]),
        "bell_scalar_y_psi_minus": complex(by[psi_m, psi_m]),
        "printed_bell_scalar_modulus": float(abs(PRINTED_BELL_SCALAR)),
    }
