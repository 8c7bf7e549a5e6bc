import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fidmin import quantum as q


def test_pauli_operator_identity_and_z():
    assert np.allclose(q.pauli_operator(1, 2), np.eye(4))
    assert np.allclose(q.pauli_operator(q.pauli_index("Z"), 1), np.diag([1, -1]))


def test_pauli_operator_xz_entries():
    W = q.pauli_operator(q.pauli_index("XZ"), 2)
    # rows/cols |q1 q2>: |00>=0, |01>=1, |10>=2, |11>=3
    assert W[0, 2] == 1
    assert W[1, 3] == -1


def test_pauli_operator_out_of_range():
    with pytest.raises(ValueError):
        q.pauli_operator(0, 1)
    with pytest.raises(ValueError):
        q.pauli_operator(17, 2)


def test_pauli_label_roundtrip():
    for n in (1, 2, 3):
        for k in range(1, 4**n + 1):
            assert q.pauli_index(q.pauli_label(k, n)) == k
    assert q.pauli_label(1, 3) == "III"


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pauli_orthonormality(n):
    W = q.pauli_stack(n)
    d = 2**n
    gram = np.einsum("aij,bji->ab", W, W) / d
    assert np.allclose(gram, np.eye(4**n), atol=1e-12)


def test_pauli_operators_hermitian_unitary():
    for W in q.pauli_stack(2):
        assert np.allclose(W, W.conj().T)
        assert np.allclose(W @ W, np.eye(4))


def test_pauli_coefficient_examples():
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    assert q.pauli_coefficient(1, np.eye(2) / 2) == pytest.approx(1 / np.sqrt(2))
    assert q.pauli_coefficient(q.pauli_index("Z"), rho0) == pytest.approx(1 / np.sqrt(2))


def test_pauli_coefficient_dimension_mismatch():
    with pytest.raises(ValueError):
        q.pauli_coefficient(1, np.eye(3) / 3)


def test_pure_state_coefficients_square_sum(rng):
    for n in (1, 2, 3):
        psi = q.haar_random_state(2**n, rng)
        assert np.sum(q.pauli_coefficients_pure(psi) ** 2) == pytest.approx(1, abs=1e-12)


def test_basis_expansion_roundtrip(rng):
    for n in (1, 2, 3):
        rho = q.random_density_matrix(2**n, rng)
        back = q.from_pauli_coefficients(q.pauli_coefficients(rho))
        assert np.abs(back - rho).max() < 1e-10


def test_haar_state_determinism_and_norm():
    a = q.haar_random_state(4, np.random.default_rng(3))
    b = q.haar_random_state(4, np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert abs(np.linalg.norm(a) - 1) < 1e-12


def test_haar_state_first_moment(rng):
    p0 = [abs(q.haar_random_state(2, rng)[0]) ** 2 for _ in range(10_000)]
    assert np.mean(p0) == pytest.approx(0.5, abs=0.02)


def test_haar_unitary_unitarity_and_determinism():
    U = q.haar_random_unitary(8, np.random.default_rng(1))
    assert np.abs(U.conj().T @ U - np.eye(8)).max() < 1e-10
    assert np.array_equal(U, q.haar_random_unitary(8, np.random.default_rng(1)))


def test_haar_unitary_eigenphases_uniform(rng):
    phases = np.concatenate([np.angle(np.linalg.eigvals(q.haar_random_unitary(2, rng))) for _ in range(10_000)])
    assert stats.kstest(phases, stats.uniform(loc=-np.pi, scale=2 * np.pi).cdf).pvalue > 0.01


def test_tetrahedron_geometry():
    a = q.TETRAHEDRON_VECTORS
    G = a @ a.T
    assert np.allclose(np.diag(G), 1)
    assert np.allclose(G[~np.eye(4, dtype=bool)], -1 / 3)
    states = q.tetrahedron_states(1)
    frame = sum(np.outer(s, s.conj()) / 2 for s in states)
    assert np.abs(frame - np.eye(2)).max() < 1e-12
    assert q.tetrahedron_states(2).shape == (16, 4)


def test_tetrahedron_bloch_design_condition():
    a = q.TETRAHEDRON_VECTORS
    design = np.hstack([np.ones((4, 1)), a])
    assert np.linalg.cond(design) < 10


def test_tetrahedron_product_order():
    s1 = q.tetrahedron_states(1)
    s2 = q.tetrahedron_states(2)
    assert np.allclose(s2[1], np.kron(s1[0], s1[1]))
    assert np.allclose(s2[4], np.kron(s1[1], s1[0]))


def test_param_to_state_examples():
    assert np.allclose(q.param_to_state([1, 0, 0, 0]), [1, 0])
    assert np.allclose(q.param_to_state([1, 0, 1, 0]), np.array([1, 1]) / np.sqrt(2))
    with pytest.raises(ValueError):
        q.param_to_state([0, 0, 0, 0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.floats(0.1, 100))
def test_param_to_state_scale_invariance(ell, scale):
    ell = np.array(ell)
    if np.linalg.norm(ell) < 1e-3:
        return
    a = q.param_to_state(ell)
    b = q.param_to_state(scale * ell)
    assert abs(np.vdot(a, b)) ** 2 == pytest.approx(1, abs=1e-12)


def test_state_param_roundtrip(rng):
    psi = q.haar_random_state(8, rng) * np.exp(0.7j)
    back = q.param_to_state(q.state_to_param(psi))
    assert abs(np.vdot(psi, back)) ** 2 == pytest.approx(1, abs=1e-12)


def test_canonical_phase():
    psi = np.array([1j, 1]) / np.sqrt(2)
    c = q.canonical_phase(psi)
    assert c[0].imag == 0 and c[0].real > 0


def test_fidelity_pure_mixed_examples():
    zero = np.array([1, 0], dtype=complex)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert q.fidelity_pure_mixed(zero, np.outer(zero, zero)) == pytest.approx(1)
    assert q.fidelity_pure_mixed(zero, np.eye(2) / 2) == pytest.approx(0.5)
    assert q.fidelity_pure_mixed(plus, np.outer(zero, zero)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        q.fidelity_pure_mixed(zero, np.eye(4) / 4)


def test_trace_norm_examples():
    assert q.trace_norm(np.zeros((2, 2))) == 0
    assert q.trace_norm(np.diag([1, -1])) == pytest.approx(1)
    assert q.trace_norm(np.diag([1, 0]) - np.diag([0, 1])) == pytest.approx(1)
