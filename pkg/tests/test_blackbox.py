import numpy as np
import pytest

from fidmin import channels as ch
from fidmin import quantum as q
from fidmin.blackbox import BlackBoxView, NoisyGateBlackBox, as_view

Z = q.pauli_index("Z")


def test_identity_channel_z_outcomes_deterministic():
    box = NoisyGateBlackBox(ch.identity_channel(2), 0)
    assert box.measure_pauli([1, 0], Z, 100) == 100


def test_erasure_channel_outcome_mean(rng):
    box = NoisyGateBlackBox(ch.erasure_channel(2), rng)
    t = 100_000
    s = box.measure_pauli(q.haar_random_state(2, rng), Z, t)
    assert abs(s / t) <= 3 / np.sqrt(t)


def test_meter_counts_every_shot():
    box = NoisyGateBlackBox(ch.identity_channel(2), 0)
    assert box.uses() == 0
    box.measure_pauli([1, 0], Z, 5)
    box.measure_pauli([1, 0], Z, 7)
    assert box.uses() == 12
    box.measure_tetrahedron(1, 25)
    assert box.uses() == 37


def test_meter_after_pauli_then_tetrahedron():
    box = NoisyGateBlackBox(ch.identity_channel(2), 0)
    box.measure_pauli([1, 0], Z, 10)
    assert box.uses() == 10
    box.measure_tetrahedron(2, 25)
    assert box.uses() == 35


def test_measure_pauli_rejects_bad_queries():
    box = NoisyGateBlackBox(ch.identity_channel(2), 0)
    with pytest.raises(ValueError):
        box.measure_pauli([1, 0], 1, 10)
    with pytest.raises(ValueError):
        box.measure_pauli([1, 0], Z, 0)
    with pytest.raises(ValueError):
        box.measure_pauli([1, 0], 5, 1)
    with pytest.raises(ValueError):
        box.measure_pauli([1, 0, 0, 0], Z, 1)
    assert box.uses() == 0


def test_outcome_sum_parity_and_range(rng):
    box = NoisyGateBlackBox(ch.random_hs_channel(1, rng), rng)
    for t in (1, 2, 7, 100):
        s = box.measure_pauli(q.haar_random_state(2, rng), 2, t)
        assert abs(s) <= t and (s - t) % 2 == 0


def test_vectorized_pauli_batches(rng):
    box = NoisyGateBlackBox(ch.random_hs_channel(2, rng), rng)
    sums = box.measure_pauli(q.haar_random_state(4, rng), np.array([2, 5, 16]), np.array([3, 4, 5]))
    assert sums.shape == (3,)
    assert box.uses() == 12


def test_pauli_frequency_consistency(rng):
    c = ch.random_hs_channel(2, rng)
    box = NoisyGateBlackBox(c, rng)
    psi = q.haar_random_state(4, rng)
    k, t = 7, 100_000
    expval = np.trace(q.pauli_operator(k, 2) @ ch.apply_pure(c, psi)).real
    mean = box.measure_pauli(psi, k, t) / t
    sd = np.sqrt((1 - expval**2) / t)
    assert abs(mean - expval) <= 4 * sd


def test_tetrahedron_probabilities_and_counts(rng):
    c = ch.random_hs_channel(1, rng)
    box = NoisyGateBlackBox(c, rng)
    probs = box._tetra_probs()
    assert np.allclose(probs.sum(axis=1), 1, atol=1e-12)
    idbox = NoisyGateBlackBox(ch.identity_channel(2), 0)
    assert idbox._tetra_probs()[0, 0] == pytest.approx(0.5, abs=1e-12)
    counts = box.measure_tetrahedron(3, 1000)
    assert counts.sum() == 1000 and counts.shape == (4,)
    with pytest.raises(ValueError):
        box.measure_tetrahedron(0, 10)
    with pytest.raises(ValueError):
        box.measure_tetrahedron(5, 10)


def test_tetrahedron_frequency_consistency(rng):
    box = NoisyGateBlackBox(ch.random_hs_channel(1, rng), rng)
    t = 100_000
    freq = box.measure_tetrahedron(2, t) / t
    p = box._tetra_probs()[1]
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / t))


def test_view_exposes_only_the_query_interface(rng):
    box = NoisyGateBlackBox(ch.random_hs_channel(1, rng), rng)
    view = as_view(box)
    assert isinstance(view, BlackBoxView)
    public = {name for name in dir(view) if not name.startswith("_")}
    assert public == {"measure_pauli", "measure_tetrahedron", "uses", "n_qubits", "dim"}
    for fn in (view.measure_pauli, view.measure_tetrahedron, view.uses):
        assert not hasattr(fn, "__self__")
    with pytest.raises(AttributeError):
        view.channel = None
    assert view.n_qubits == 1 and view.dim == 2
    view.measure_pauli([1, 0], Z, 3)
    assert box.uses() == view.uses() == 3
    with pytest.raises(TypeError):
        as_view(ch.identity_channel(2))
