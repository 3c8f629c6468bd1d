import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qproc import linalg as la
from qproc import metrics as mt
from qproc import zoo
from qproc.channels import KrausChannel, induced_channel, unitary_channel

import oracles as o

I, X, Y, Z = la.PAULI_I, la.PAULI_X, la.PAULI_Y, la.PAULI_Z


def cnot_phase_damping(p):
    return KrausChannel([np.sqrt(p) * I, np.sqrt(1 - p) * Z])


def test_process_fidelity_unitary_examples():
    u = la.haar_unitary(3, 1)
    assert mt.process_fidelity_unitary(u, unitary_channel(u)) == pytest.approx(1, abs=1e-12)
    assert mt.process_fidelity_unitary(I, cnot_phase_damping(0.3)) == pytest.approx(0.3)
    phi = 0.4
    assert mt.process_fidelity_unitary(la.rotation(-phi), cnot_phase_damping(1)) == pytest.approx(np.cos(phi) ** 2)
    with pytest.raises(ValueError):
        mt.process_fidelity_unitary(np.eye(3), cnot_phase_damping(1))


def test_process_fidelity_channels():
    c = cnot_phase_damping(0.7)
    assert mt.process_fidelity(c, c) == pytest.approx(1, abs=1e-9)
    dep = KrausChannel([np.outer(la.ket(j, 2), la.ket(k, 2)) / np.sqrt(2) for j in range(2) for k in range(2)])
    assert mt.process_fidelity(dep, unitary_channel(la.haar_unitary(2, 2))) == pytest.approx(0.25)
    assert mt.fidelity_report(unitary_channel(Z), c).method == "unitary-closed-form"
    assert mt.fidelity_report(dep, c).method == "choi-general"
    assert mt.fidelity_report(Z, c).value == pytest.approx(0.3)


def test_program_fidelity_operator_examples():
    r = mt.program_fidelity_operator(zoo.cnot_processor(), I)
    w, v = np.linalg.eigh(r)
    assert np.allclose(w, [0, 1])
    assert abs(np.vdot(v[:, 1], la.KET_PLUS)) == pytest.approx(1)
    rq = mt.program_fidelity_operator(zoo.qid_processor(2), X)
    assert np.linalg.eigvalsh(rq)[-1] == pytest.approx(1)
    rs = mt.program_fidelity_operator(zoo.swap_processor(2), la.haar_unitary(2, 3))
    assert np.allclose(rs, np.eye(2) / 4)
    with pytest.raises(ValueError):
        mt.program_fidelity_operator(zoo.cnot_processor(), np.eye(3))


def test_epsilon_examples():
    cnot = zoo.cnot_processor()
    for phi in np.linspace(0, np.pi, 9):
        e = mt.epsilon_of_target(cnot, la.rotation(-phi)).epsilon
        assert e == pytest.approx(1 - max(np.cos(phi) ** 2, np.sin(phi) ** 2), abs=1e-12)
    for d in (2, 3):
        qid = zoo.qid_processor(d)
        for u in zoo.weyl_basis(d):
            assert mt.epsilon_of_target(qid, u).epsilon == pytest.approx(0, abs=1e-12)
    w = zoo.flat_weyl_witness(2)
    assert np.allclose(w, np.cos(np.pi / 3) * I + 1j * np.sin(np.pi / 3) * (X + Y + Z) / np.sqrt(3))
    assert mt.epsilon_of_target(zoo.qid_processor(2), w).epsilon == pytest.approx(0.75, abs=1e-12)
    for d in (2, 3, 4):
        assert mt.epsilon_of_target(zoo.swap_processor(d), la.haar_unitary(d, d)).epsilon == pytest.approx(1 - 1 / d**2)


def test_qid_witness_against_pauli_mixture_brute_force():
    # best Pauli mixture over a simplex grid: F = sum_k p_k |Tr U_k^dag W|^2 / 4
    w = zoo.flat_weyl_witness(2)
    overlaps = [abs(np.trace(u.conj().T @ w)) ** 2 / 4 for u in zoo.weyl_basis(2)]
    grid = np.linspace(0, 1, 21)
    best = max(a * overlaps[0] + b * overlaps[1] + c * overlaps[2] + (1 - a - b - c) * overlaps[3]
               for a in grid for b in grid for c in grid if a + b + c <= 1 + 1e-12)
    assert 1 - best == pytest.approx(0.75, abs=1e-12)


def test_epsilon_u1_examples():
    cnot = zoo.cnot_processor()
    assert mt.epsilon_worst_u1(cnot) == pytest.approx(0.5, abs=1e-9)
    assert mt.epsilon_avg_u1(cnot) == pytest.approx(0.5 - 1 / np.pi, abs=1e-6)
    assert mt.epsilon_worst_u1(zoo.u1_grid_processor(4)) == pytest.approx(np.sin(np.pi / 8) ** 2, abs=1e-9)
    assert np.sin(np.pi / 8) ** 2 == pytest.approx(0.146447, abs=1e-6)
    with pytest.raises(ValueError):
        mt.epsilon_curve_u1(zoo.qid_processor(3), [0.1])


def test_epsilon_worst_haar():
    qid = zoo.qid_processor(2)
    est = mt.epsilon_worst_haar(qid, 10_000, 3, witness=zoo.flat_weyl_witness(2))
    assert est.haar_max < 0.75 and est.haar_max > 0.7
    assert est.witness_epsilon == pytest.approx(0.75, abs=1e-12) and est.value == est.witness_epsilon
    again = mt.epsilon_worst_haar(qid, 10_000, 3)
    assert again.haar_max == est.haar_max
    sw = mt.epsilon_worst_haar(zoo.swap_processor(2), 500, 4)
    assert sw.haar_max == pytest.approx(0.75) and sw.stderr < 1e-12


def test_universality_examples():
    assert mt.universality_check(zoo.swap_processor(2)) == mt.UniversalityReport(True, 4, 2)
    assert mt.universality_check(zoo.cnot_processor()) == mt.UniversalityReport(False, 2, 2)
    for n in (1, 2, 3):
        r = mt.universality_check(zoo.u_processor(la.haar_unitaries(2, n, n)))
        assert not r.universal and r.operator_rank <= n
    assert mt.universal_lower_bound(2) == 0.75


def test_grid_oracle_small():
    """Eigenvalue method against the brute-force grid for the CNOT processor (N = 2)."""
    p = zoo.cnot_processor()
    u = la.haar_unitary(2, 77)
    grid = o.brute_force_epsilon(p.G, 2, 2, u, points=250_000)
    eig = mt.epsilon_of_target(p, u).epsilon
    assert eig <= grid + 1e-12 and grid - eig <= 1e-4


def test_u_processor_basis_state_optimal():
    for s in range(20):
        n = 2 + s % 3
        p = zoo.u_processor(la.haar_unitaries(2 + s % 2, n, (s, 0)))
        u = la.haar_unitary(p.d, (s, 1))
        eps = mt.epsilon_of_target(p, u).epsilon
        best_basis = min(1 - o.fidelity(p.G, p.d, p.N, la.ket(j, n), u) for j in range(n))
        assert eps == pytest.approx(best_basis, abs=1e-9)


def test_orthogonal_programs_worst_case():
    """Qubit U-processors with four unitaries never beat 3/4 in the worst case."""
    for s in range(4):
        p = zoo.u_processor(la.haar_unitaries(2, 4, (55, s)))
        assert mt.epsilon_worst_search(p, restarts=2, seed=s, samples=512).epsilon >= 0.75 - 1e-9
    qid = mt.epsilon_worst_search(zoo.u_processor(zoo.weyl_basis(2)), restarts=2, samples=512)
    # local search: a certified lower bound that approaches the kink at 3/4
    assert 0.745 <= qid.epsilon <= 0.75 + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fidelity_concave(seed):
    proc = zoo.u_processor(la.haar_unitaries(2, 3, (seed, 0)))
    g = la.rng((seed, 1))
    xis = [la.random_density(3, (seed, 2, k)) for k in range(3)]
    p = g.dirichlet(np.ones(3))
    u = la.haar_unitary(2, (seed, 3))
    mix = sum(q * x for q, x in zip(p, xis))
    lhs = mt.induced_fidelity(proc, mix, u)
    rhs = sum(q * mt.induced_fidelity(proc, x, u) for q, x in zip(p, xis))
    assert lhs >= rhs - 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.integers(1, 4))
def test_epsilon_in_unit_interval(seed, d, n):
    from qproc.channels import Processor

    p = Processor(la.haar_unitary(d * n, seed), d, n)
    u = la.haar_unitary(d, (seed, 1))
    r = mt.epsilon_of_target(p, u)
    assert 0 <= r.epsilon <= 1
    assert 1 - r.epsilon == pytest.approx(o.fidelity(p.G, d, n, r.optimal_program, u), abs=1e-9)
    vals = mt.epsilon_values(p, la.haar_unitaries(d, 8, (seed, 2)))
    assert vals.min() >= 0 and vals.max() <= 1


def test_clamp_limits():
    assert mt._clamp(1 + 5e-9) == 1.0
    with pytest.raises(ArithmeticError):
        mt._clamp(1 + 1e-6)
