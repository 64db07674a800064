import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splitpump import qmath
from splitpump.errors import MalformedInputError
from splitpump.qmath import I2, SX, SZ, PauliString, dagger, tensor

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def taylor_exp(a, terms=30):
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def explicit_ancilla_trace(rho):
    d = rho.shape[0] // 2
    out = np.zeros((d, d), dtype=complex)
    for a in range(2):
        bra = np.kron(qmath.basis_ket(a, 1).reshape(1, 2), np.eye(d))
        out += bra @ rho @ dagger(bra)
    return out


def test_tensor_identity():
    assert np.array_equal(tensor(I2, I2), np.eye(4))


def test_tensor_ancilla_leftmost():
    v = tensor(qmath.basis_ket(1, 1), qmath.ket_from_bits("00"))
    assert np.array_equal(v, qmath.basis_ket(4, 3))


def test_tensor_block_structure():
    m = tensor(SX, SZ)
    assert np.array_equal(m[:2, :2], np.zeros((2, 2)))
    assert np.array_equal(m[:2, 2:], SZ)
    assert np.array_equal(m[2:, :2], SZ)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_tensor_associative(seed):
    # integer entries keep every product exact, so equality is bitwise
    rng = np.random.default_rng(seed)
    a, b, c = (rng.integers(-9, 10, (2, 2)) + 1j * rng.integers(-9, 10, (2, 2)) for _ in range(3))
    assert np.array_equal(tensor(tensor(a, b), c), tensor(a, tensor(b, c)))


def test_partial_trace_product_state():
    rho = qmath.random_density(2, 3)
    out = qmath.partial_trace_ancilla(tensor(np.diag([0, 1]).astype(complex), rho))
    np.testing.assert_allclose(out, rho, atol=1e-15)


def test_partial_trace_bell_pair_is_mixed():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(qmath.partial_trace_ancilla(qmath.pure_density(phi)), I2 / 2, atol=1e-15)


def test_partial_trace_rejects_odd_dimension():
    with pytest.raises(MalformedInputError):
        qmath.partial_trace_ancilla(np.eye(3))


@given(seeds, st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_partial_trace_matches_explicit_sum(seed, n):
    rng = np.random.default_rng(seed)
    rho = qmath.ginibre(2 << n, rng)
    np.testing.assert_allclose(qmath.partial_trace_ancilla(rho), explicit_ancilla_trace(rho), atol=1e-13)


@given(seeds, st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_partial_trace_of_product_scales_by_trace(seed, n):
    rng = np.random.default_rng(seed)
    sigma = qmath.ginibre(2, rng)
    rho = qmath.ginibre(1 << n, rng)
    np.testing.assert_allclose(qmath.partial_trace_ancilla(tensor(sigma, rho)), np.trace(sigma) * rho,
                               atol=1e-12)


def test_hermitian_exp_diagonal():
    u = qmath.hermitian_exp(SZ, math.pi, 0.5)
    np.testing.assert_allclose(u, np.diag([np.exp(-1j * math.pi / 2), np.exp(1j * math.pi / 2)]), atol=1e-15)


def test_hermitian_exp_zero_generator():
    np.testing.assert_allclose(qmath.hermitian_exp(np.zeros((4, 4)), 1.234, 7.0), np.eye(4), atol=0)


def test_hermitian_exp_matches_taylor_series():
    from splitpump.iontrap import collective_spin

    sx = collective_spin(SX, 3)
    h = sx @ sx
    u = qmath.hermitian_exp(h, math.pi / 2, 0.25)
    np.testing.assert_allclose(u, taylor_exp(-1j * 0.25 * math.pi / 2 * h), atol=1e-10)
    assert qmath.is_unitary(u, 1e-10)


def test_hermitian_exp_rejects_non_hermitian():
    with pytest.raises(MalformedInputError):
        qmath.hermitian_exp(np.array([[0, 1], [0, 0]]), 1.0)


@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=30, deadline=None)
def test_hermitian_exp_group_law(seed, t1, t2):
    h = qmath.random_hermitian(8, seed)
    lhs = qmath.hermitian_exp(h, t1 + t2, 0.7)
    rhs = qmath.hermitian_exp(h, t1, 0.7) @ qmath.hermitian_exp(h, t2, 0.7)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_fidelity_examples():
    psi = qmath.random_ket(3, 1)
    assert qmath.fidelity(qmath.pure_density(psi), psi) == pytest.approx(1, abs=1e-12)
    assert qmath.fidelity(qmath.maximally_mixed(3), psi) == pytest.approx(1 / 8, abs=1e-12)
    phi_p = np.array([1, 0, 0, 1]) / np.sqrt(2)
    psi_m = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert qmath.fidelity(qmath.pure_density(phi_p), psi_m) == 0


def test_fidelity_dimension_mismatch():
    with pytest.raises(MalformedInputError):
        qmath.fidelity(np.eye(4) / 4, qmath.basis_ket(0, 1))


@given(seeds, st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_fidelity_unitary_invariance(seed, n):
    rho = qmath.random_density(n, [seed, 0])
    psi = qmath.random_ket(n, [seed, 1])
    u = qmath.random_unitary(1 << n, [seed, 2])
    f0 = qmath.fidelity(rho, psi)
    f1 = qmath.fidelity(u @ rho @ dagger(u), u @ psi)
    assert abs(f0 - f1) <= 1e-12


def test_random_density_deterministic():
    np.testing.assert_array_equal(qmath.random_density(3, 42), qmath.random_density(3, 42))


@given(seeds, st.integers(1, 5))
@settings(max_examples=30, deadline=None)
def test_random_density_is_valid(seed, n):
    qmath.as_density(qmath.random_density(n, seed))


def test_random_density_mean_is_maximally_mixed():
    mean = sum(qmath.random_density(1, [11, i]) for i in range(1000)) / 1000
    assert np.max(np.abs(mean - I2 / 2)) < 0.05


def test_complete_identity():
    for n in (1, 2, 4):
        np.testing.assert_array_equal(qmath.complete_to_unitary([qmath.basis_ket(0, n)], 1 << n),
                                      np.eye(1 << n))


def test_complete_singlet():
    psi_m = np.array([0, 1, -1, 0]) / np.sqrt(2)
    u = qmath.complete_to_unitary([psi_m], 4)
    np.testing.assert_allclose(u @ qmath.basis_ket(0, 2), psi_m, atol=1e-15)
    assert qmath.is_unitary(u, 1e-12)


def test_complete_two_columns():
    q = qmath.random_unitary(8, 5)
    u = qmath.complete_to_unitary([q[:, 0], q[:, 1]], 8)
    np.testing.assert_allclose(u[:, :2], q[:, :2], atol=1e-12)
    assert qmath.is_unitary(u, 1e-12)


def test_complete_rejects_non_orthonormal():
    with pytest.raises(MalformedInputError):
        qmath.complete_to_unitary([qmath.basis_ket(0, 2), np.array([1, 1, 0, 0]) / np.sqrt(2)], 4)


@given(st.integers(0, 99), st.integers(1, 6))
@settings(max_examples=100, deadline=None)
def test_complete_is_unitary(seed, n):
    psi = qmath.random_ket(n, seed)
    u = qmath.complete_to_unitary([psi], 1 << n)
    assert qmath.is_unitary(u, 1e-12)
    np.testing.assert_array_equal(u[:, 0], psi)


def test_pauli_string_algebra():
    xx = PauliString.parse("-XX")
    assert xx.sign == -1 and xx.letters == "XX"
    m = xx.matrix()
    np.testing.assert_allclose(m @ m, np.eye(4))
    np.testing.assert_allclose(m, dagger(m))
    assert xx.commutes_with(PauliString.parse("YY"))
    assert not PauliString.parse("XI").commutes_with(PauliString.parse("ZI"))
    assert str(PauliString.single("Z", 2, 3)) == "+IZI"
    with pytest.raises(MalformedInputError):
        PauliString("XQ")


def test_gf2_rank():
    gens = [PauliString.parse(s).symplectic() for s in ("XX", "ZZ", "YY")]
    assert qmath.gf2_rank(np.stack(gens)) == 2


def test_phase_helpers():
    a = qmath.random_unitary(4, 1)
    assert qmath.phase_distance(a, np.exp(0.3j) * a) < 1e-15
    b = qmath.normalize_phase(np.exp(1.1j) * a)
    i = np.argmax(np.abs(b))
    assert b.flat[i].real > 0 and abs(b.flat[i].imag) < 1e-15
