"""N-step preparation drivers, one-step dead-beat preparation and gate-error studies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qmath
from .channels import (MeasurementRecord, coherent_step, measurement_branches,
                       measurement_feedback_step, pumping_channel, u_perp)
from .errors import MalformedInputError
from .subspaces import SplittingDecomposition, Subspace, build_splitting, intersect, step_reordering

SUPPORT_TOL = 1e-9
MODES = ("kraus", "coherent", "trajectory")


@dataclass(frozen=True, eq=False)
class StepRecord:
    index: int
    rho: np.ndarray
    fidelity: float
    support_dims: tuple[int, ...]
    support_weights: tuple[float, ...]

    @property
    def support_ok(self) -> bool:
        return all(w >= 1 - SUPPORT_TOL for w in self.support_weights)


@dataclass(frozen=True, eq=False)
class ProtocolTrace:
    target: np.ndarray
    mode: str
    initial_fidelity: float
    steps: list[StepRecord] = field(default_factory=list)
    epsilon: float = 0.0

    @property
    def final(self) -> StepRecord:
        return self.steps[-1]

    @property
    def final_state(self) -> np.ndarray:
        return self.steps[-1].rho

    @property
    def final_fidelity(self) -> float:
        return self.steps[-1].fidelity

    @property
    def fidelities(self) -> list[float]:
        return [s.fidelity for s in self.steps]


def step_rng(seed, step: int) -> np.random.Generator:
    """Independent, reproducible stream for one step of one run."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = 0
    entropy = [int(s) for s in seed] if isinstance(seed, (list, tuple)) else [int(seed)]
    return np.random.default_rng(entropy + [step])


def nested_intersections(subspaces: Sequence[Subspace]) -> list[Subspace]:
    """[S_1, S_1 & S_2, ..., S_1 & ... & S_N], each computed by :func:`intersect`."""
    return [intersect(subspaces[:k]) for k in range(1, len(subspaces) + 1)]


def _record(index, rho, psi, nested) -> StepRecord:
    upto = nested[:index]
    return StepRecord(index, rho, qmath.fidelity(rho, psi),
                      tuple(s.dim for s in upto), tuple(s.weight(rho) for s in upto))


def _prepare(target, rho0, decomposition):
    psi = qmath.as_ket(target, tol=1e-10)
    rho = qmath.as_density(rho0, tol=1e-10)
    if rho.shape[0] != psi.shape[0]:
        raise MalformedInputError(f"rho0 dimension {rho.shape[0]} does not match target {psi.shape[0]}")
    if decomposition is None:
        decomposition = build_splitting(psi)
    elif decomposition.basis_unitary.shape[0] != psi.shape[0]:
        raise MalformedInputError("decomposition does not match the target")
    return psi, rho, decomposition


def stabilize(target, rho0, mode: str = "kraus", seed=None,
              decomposition: SplittingDecomposition | None = None,
              nested: Sequence[Subspace] | None = None) -> ProtocolTrace:
    """Drive ``rho0`` to ``target`` with N pumping steps, one per splitting subspace.

    ``mode`` is "kraus" (averaged channel), "coherent" (ancilla circuit, traced)
    or "trajectory" (one sampled measurement-feedback history).  ``nested``
    caches the intersections used for the support diagnostics.
    """
    if mode not in MODES:
        raise MalformedInputError(f"unknown mode {mode!r}")
    psi, rho, decomp = _prepare(target, rho0, decomposition)
    if nested is None:
        nested = nested_intersections(decomp.subspaces)
    trace = ProtocolTrace(psi, mode, qmath.fidelity(rho, psi))
    for ell in range(1, decomp.num_qubits + 1):
        s = decomp.subspaces[ell - 1]
        if mode == "kraus":
            rho = pumping_channel(s, u_perp(s)).apply(rho)
        elif mode == "coherent":
            rho = coherent_step(rho, step_reordering(decomp, ell))
        else:
            rho = measurement_feedback_step(rho, s, u_perp(s), step_rng(seed, ell)).posterior
        trace.steps.append(_record(ell, rho, psi, nested))
    return trace


def trajectory_mean(target, rho0, trials: int, seed=0,
                    decomposition: SplittingDecomposition | None = None) -> list[np.ndarray]:
    """Per-step average of ``trials`` sampled trajectories (trial t uses seed [seed, t])."""
    psi, rho, decomp = _prepare(target, rho0, decomposition)
    nested = nested_intersections(decomp.subspaces)
    acc = [np.zeros_like(rho) for _ in range(decomp.num_qubits)]
    for t in range(trials):
        tr = stabilize(psi, rho, "trajectory", seed=np.random.default_rng([int(seed), t]),
                       decomposition=decomp, nested=nested)
        for a, st in zip(acc, tr.steps):
            a += st.rho
    return [a / trials for a in acc]


def dead_beat_controls(target, basis: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Unitaries U_k with U_k |phi_k> = |psi>, built from basis completions."""
    psi = qmath.as_ket(target, tol=1e-10)
    a_psi = qmath.complete_to_unitary([psi])
    return [a_psi @ qmath.dagger(qmath.complete_to_unitary([phi])) for phi in basis]


def _check_basis(basis, dim):
    b = np.stack([np.asarray(v, dtype=complex) for v in basis], axis=1)
    if b.shape != (dim, dim) or not qmath.is_unitary(b, 1e-10):
        raise MalformedInputError("measurement basis is not an orthonormal basis of the register")
    return [b[:, k] for k in range(dim)]


def dead_beat_branches(target, rho0, basis=None) -> list[tuple[MeasurementRecord, np.ndarray | None]]:
    """Every outcome of the non-degenerate measurement with its controlled final state."""
    psi = qmath.as_ket(target, tol=1e-10)
    rho = qmath.as_density(rho0, tol=1e-10)
    d = psi.shape[0]
    if rho.shape[0] != d:
        raise MalformedInputError("rho0 does not match the target dimension")
    basis = _check_basis(np.eye(d) if basis is None else basis, d)
    controls = dead_beat_controls(psi, basis)
    out = []
    for k, (phi, u) in enumerate(zip(basis, controls)):
        p = float(np.real(np.vdot(phi, rho @ phi)))
        p = min(max(p, 0.0), 1.0)
        post = qmath.pure_density(phi) if p > 1e-14 else None
        final = u @ post @ qmath.dagger(u) if post is not None else None
        out.append((MeasurementRecord(k, p, post), final))
    return out


def dead_beat_prepare(target, rho0, basis=None, seed=None) -> tuple[MeasurementRecord, np.ndarray]:
    """Measure in ``basis`` (default computational), then steer the outcome to ``target``."""
    branches = dead_beat_branches(target, rho0, basis)
    probs = np.array([rec.probability for rec, _ in branches])
    k = int(np.random.default_rng(seed).choice(len(probs), p=probs / probs.sum()))
    return branches[k]


def perturbed_stabilize(target, rho0, epsilon: float, seed=None,
                        decomposition: SplittingDecomposition | None = None) -> ProtocolTrace:
    """Coherent protocol with each step's U_psi^(l) replaced by exp(-i eps H_l) U_psi^(l).

    H_l is a random Hermitian matrix of unit spectral norm drawn from the
    step's seeded stream.
    """
    if epsilon < 0:
        raise MalformedInputError("epsilon must be non-negative")
    psi, rho, decomp = _prepare(target, rho0, decomposition)
    nested = nested_intersections(decomp.subspaces)
    d = psi.shape[0]
    trace = ProtocolTrace(psi, "coherent", qmath.fidelity(rho, psi), epsilon=float(epsilon))
    for ell in range(1, decomp.num_qubits + 1):
        u = step_reordering(decomp, ell)
        if epsilon > 0:
            h = qmath.random_hermitian(d, step_rng(seed, ell))
            u = qmath.hermitian_exp(h, epsilon) @ u
        rho = coherent_step(rho, u)
        trace.steps.append(_record(ell, rho, psi, nested))
    return trace


def measurement_average(rho, s: Subspace, u_perp_op) -> np.ndarray:
    """Probability-weighted mean of the measurement-feedback posteriors."""
    return sum(b.probability * b.posterior for b in measurement_branches(rho, s, u_perp_op)
               if b.posterior is not None)
