"""Acceptance suite: one test per criterion, each at its stated tolerance.

Each test records PASS/FAIL plus a short measurement in ``conftest.ACCEPTANCE``;
the summary hook prints them after the run.
"""

import functools
import time

import numpy as np
import pytest

from splitpump import channels as ch
from splitpump import iontrap as it
from splitpump import protocol, qmath
from splitpump.subspaces import Subspace, build_splitting
from tests import conftest


def criterion(num, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                msg = str(exc).splitlines()[0][:160] if str(exc) else type(exc).__name__
                conftest.ACCEPTANCE[num] = (title, False, msg)
                raise
            conftest.ACCEPTANCE[num] = (title, True, detail)
        return run
    return wrap


@pytest.fixture(scope="module")
def convergence_runs():
    """N = 1..6, 20 targets each, 10 initial states per target, kraus mode."""
    start = time.perf_counter()
    runs = []
    for n in range(1, 7):
        for t in range(20):
            psi = qmath.random_ket(n, [n, t, 0])
            decomp = build_splitting(psi)
            nested = protocol.nested_intersections(decomp.subspaces)
            for r in range(10):
                rho = qmath.random_density(n, [n, t, r, 1])
                runs.append((n, protocol.stabilize(psi, rho, "kraus", decomposition=decomp, nested=nested)))
    return runs, time.perf_counter() - start


@criterion(1, "N-step convergence")
def test_c01_n_step_convergence(convergence_runs):
    runs, elapsed = convergence_runs
    assert len(runs) == 6 * 20 * 10
    worst = 1.0
    for n, tr in runs:
        assert len(tr.steps) == n
        worst = min(worst, tr.final_fidelity)
    assert worst >= 1 - 1e-9, f"worst final fidelity {worst!r}"
    assert elapsed < 60, f"took {elapsed:.1f} s"
    return f"{len(runs)} runs, worst 1-F = {1 - worst:.2e}, {elapsed:.1f} s"


@criterion(2, "coherent and kraus steps agree")
def test_c02_coherent_matches_kraus():
    worst = 0.0
    for n in (2, 3, 4):
        for s in range(100):
            psi = qmath.random_ket(n, [n, s, 10])
            rho = qmath.random_density(n, [n, s, 11])
            decomp = build_splitting(psi)
            a = protocol.stabilize(psi, rho, "kraus", decomposition=decomp)
            b = protocol.stabilize(psi, rho, "coherent", decomposition=decomp)
            # also compare single steps from the same input state
            prev = rho
            for ell, (x, y) in enumerate(zip(a.steps, b.steps), start=1):
                worst = max(worst, float(np.max(np.abs(x.rho - y.rho))))
                sub = decomp.subspaces[ell - 1]
                one_k = ch.pumping_channel(sub, ch.u_perp(sub)).apply(prev)
                one_c = ch.coherent_step(prev, protocol.step_reordering(decomp, ell))
                worst = max(worst, float(np.max(np.abs(one_k - one_c))))
                prev = x.rho
    assert worst <= 1e-10, f"max entrywise difference {worst!r}"
    return f"300 pairs, max difference {worst:.2e}"


@criterion(3, "support containment chain")
def test_c03_support_chain(convergence_runs):
    runs, _ = convergence_runs
    worst = 1.0
    for n, tr in runs:
        for st in tr.steps:
            assert len(st.support_weights) == st.index
            worst = min(worst, *st.support_weights)
    assert worst >= 1 - 1e-9, f"smallest nested weight {worst!r}"
    return f"smallest nested weight 1 - {1 - worst:.2e}"


@criterion(4, "dead-beat one-cycle preparation")
def test_c04_dead_beat():
    worst, branches = 0.0, 0
    for s in range(100):
        n = 1 + s % 4
        psi = qmath.random_ket(n, [s, 20])
        basis = list(qmath.random_unitary(1 << n, [s, 21]).T) if s % 2 else None
        for rec, final in protocol.dead_beat_branches(psi, qmath.random_density(n, [s, 22]), basis):
            if final is None:
                continue
            branches += 1
            worst = max(worst, abs(qmath.fidelity(final, psi) - 1))
    assert worst <= 1e-12, f"worst |F - 1| = {worst!r}"
    return f"100 trials, {branches} branches, worst |F-1| = {worst:.1e}"


@criterion(5, "MS decomposition identities")
def test_c05_ms_identities():
    ux, cx = it.decompose_ms_x()
    uy, cy = it.decompose_ms_y()
    dx = qmath.phase_distance(it.ms_gate(np.pi / 2, 0.0, 3), ux @ cx)
    dy = qmath.phase_distance(it.ms_gate(np.pi / 2, np.pi / 2, 3), uy @ cy)
    comm = 0.0
    for letter, u in (("X", ux), ("Y", uy)):
        for p in it.sector_projectors(letter):
            comm = max(comm, ch.commutation_residual(u, qmath.tensor(qmath.I2, p)))
    assert dx <= 1e-10 and dy <= 1e-10, f"decomposition residuals {dx!r}, {dy!r}"
    assert comm <= 1e-12, f"commutator residual {comm!r}"
    return f"residuals X {dx:.1e}, Y {dy:.1e}, commutators {comm:.1e}"


@criterion(6, "Bell pumping into Psi-")
def test_c06_bell_pumping():
    pm, _ = it.sector_projectors("X")
    starts = [qmath.maximally_mixed(2)] + [qmath.random_density(2, [s, 30]) for s in range(100)]
    worst_f, worst_w = 1.0, 1.0
    for simplified in (False, True):
        for rho in starts:
            tr = it.bell_pump(rho, simplified)
            assert len(tr.steps) == 2
            worst_f = min(worst_f, tr.final_fidelity)
            worst_w = min(worst_w, float(np.real(np.trace(pm @ tr.steps[0].rho))))
    assert worst_f >= 1 - 1e-9, f"worst final fidelity {worst_f!r}"
    assert worst_w >= 1 - 1e-9, f"X1X2 = -1 weight after cycle 1 {worst_w!r}"
    return f"202 runs, worst 1-F = {1 - worst_f:.1e}, worst sector leak {1 - worst_w:.1e}"


@criterion(7, "generalized gates with compensation")
def test_c07_generalized_gates():
    worst = 0.0
    for s in range(50):
        n = 1 + s % 3
        pair = ch.random_generalized(n, [s, 40])
        u = qmath.random_unitary(1 << n, [s, 41])
        rho = qmath.random_density(n, [s, 42])
        sub = Subspace.from_columns(u, np.arange(1 << n) < (1 << (n - 1)))
        expected = ch.pumping_channel(sub, u @ pair.u_perp @ qmath.dagger(u)).apply(rho)
        worst = max(worst, float(np.max(np.abs(ch.coherent_step(rho, u, pair) - expected))))
    pm, _ = it.sector_projectors("X")
    flags = ch.compensation_needed(it.u_double_prime_x(), [pm])
    flags += ch.compensation_needed(it.u_double_prime_y(), [qmath.pure_density(it.BELL["psi-"])])
    assert worst <= 1e-10, f"max deviation from the Kraus channel {worst!r}"
    assert flags == [False, False], f"MS residuals flagged as needing compensation: {flags}"
    return f"50 pairs, max deviation {worst:.1e}; MS residuals need no compensation"


def _channels_under_test(seed):
    rng = np.random.default_rng([seed, 50])
    n = 1 + seed % 4
    u = qmath.random_unitary(1 << n, rng)
    sub = Subspace.from_columns(u, np.arange(1 << n) < (1 << (n - 1)))
    pairing = qmath.random_unitary(sub.dim, rng)
    yield n, ch.pumping_channel(sub, ch.u_perp(sub))
    yield n, ch.pumping_channel(sub, ch.u_perp(sub, pairing))


FIXED_CHANNELS = [
    it.x_sector_channel(),
    *(it.cycle_channel(it.bell_cycle_unitary(letter, simp)) for letter in "XY" for simp in (False, True)),
    it.cycle_channel(it.bell_cycle_unitary("X", True, it.compensated_experimental_cin(0.7))),
]


@criterion(8, "Kraus channel validity")
def test_c08_kraus_validity():
    comp = tr_err = herm = 0.0
    min_eig = 1.0
    checked = 0
    for s in range(200):
        pairs = list(_channels_under_test(s))
        rho2 = qmath.random_density(2, [s, 51])
        pairs += [(2, e) for e in FIXED_CHANNELS]
        for n, e in pairs:
            rho = rho2 if n == 2 else qmath.random_density(n, [s, 52, n])
            comp = max(comp, e.completeness_residual())
            out = e.apply(rho)
            tr_err = max(tr_err, abs(np.trace(out) - 1))
            herm = max(herm, float(np.max(np.abs(out - qmath.dagger(out)))))
            min_eig = min(min_eig, float(np.linalg.eigvalsh((out + qmath.dagger(out)) / 2).min()))
            checked += 1
    assert comp <= 1e-10, f"completeness residual {comp!r}"
    assert tr_err <= 1e-12 and herm <= 1e-12, f"trace error {tr_err!r}, Hermiticity {herm!r}"
    assert min_eig >= -1e-9, f"min eigenvalue {min_eig!r}"
    return f"{checked} channel applications, completeness {comp:.1e}, trace {tr_err:.1e}, min eig {min_eig:.1e}"


@criterion(9, "trajectory mean matches channel")
def test_c09_trajectories():
    psi = qmath.random_ket(2, [60])
    rho = qmath.random_density(2, [61])
    means = protocol.trajectory_mean(psi, rho, 2000, seed=62)
    exact = protocol.stabilize(psi, rho, "kraus")
    worst = max(float(np.max(np.abs(m - st.rho))) for m, st in zip(means, exact.steps))
    assert worst <= 0.05, f"max entrywise deviation {worst!r}"
    return f"2000 trajectories, max deviation {worst:.3f}"


EPSILONS = (1e-4, 1e-3, 1e-2)


@criterion(10, "perturbed error scaling")
def test_c10_error_scaling():
    slopes, lines = [], []
    for n in (2, 3, 4):
        meds = []
        for eps in EPSILONS:
            infid = []
            for s in range(50):
                psi = qmath.random_ket(n, [n, s, 70])
                rho = qmath.random_density(n, [n, s, 71])
                infid.append(1 - protocol.perturbed_stabilize(psi, rho, eps, seed=[n, s, 72]).final_fidelity)
            med = float(np.median(infid))
            assert med <= 10 * n * eps, f"N={n}, eps={eps}: median infidelity {med!r} > {10 * n * eps}"
            meds.append(med)
        slope = float(np.polyfit(np.log(EPSILONS), np.log(meds), 1)[0])
        slopes.append(slope)
        lines.append(f"N={n} slope {slope:.3f}")
    for slope in slopes:
        assert 0.8 <= slope <= 2.2, f"log-log slope {slope!r} outside [0.8, 2.2]"
    return ", ".join(lines)
