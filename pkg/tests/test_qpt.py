import numpy as np
import pytest

from fidmin import channels as ch
from fidmin import qpt
from fidmin.blackbox import NoisyGateBlackBox
from fidmin.landscape import bloch_grid_minimum


def test_design_blocks_conditioning():
    for B in qpt.design_factors(2):
        assert B.shape == (4, 4)
        assert np.linalg.cond(B) < 10
    assert np.linalg.cond(qpt.dense_design(1)) == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(ValueError):
        qpt.design_factors(0)


def test_identity_probabilities_from_blocks():
    J = ch.identity_channel(2).choi
    p = qpt.apply_factors(qpt.design_factors(1), qpt.choi_to_pauli_coords(J)).reshape(4, 4)
    expected = np.full((4, 4), 1 / 6) + np.eye(4) / 3
    assert np.abs(p - expected).max() < 1e-12
    box = NoisyGateBlackBox(ch.identity_channel(2), 0)
    assert np.abs(box._tetra_probs() - expected).max() < 1e-12


def test_born_probabilities_match_black_box(rng):
    c = ch.random_hs_channel(2, rng)
    box = NoisyGateBlackBox(c, rng)
    assert np.abs(qpt.born_probabilities(c.choi) - box._tetra_probs()).max() < 1e-12


def test_factorized_matches_dense(rng):
    x = rng.normal(size=256)
    A = qpt.dense_design(2)
    assert A.shape == (256, 256)
    assert np.abs(A @ x - qpt.apply_factors(qpt.design_factors(2), x)).max() < 1e-10


def test_pauli_coordinate_roundtrip(rng):
    J = ch.random_hs_channel(2, rng).choi
    assert np.abs(qpt.pauli_coords_to_choi(qpt.choi_to_pauli_coords(J), 4) - J).max() < 1e-12


def test_simulate_counts_rows_and_meter(rng):
    for n in (1, 2):
        box = NoisyGateBlackBox(ch.random_hs_channel(n, rng), rng)
        counts = qpt.simulate_counts(box, 50)
        assert counts.counts.shape == (4**n, 4**n)
        assert np.all(counts.counts.sum(axis=1) == 50)
        assert box.uses() == 4**n * 50 == counts.total


def test_frequencies_match_born_probabilities(rng):
    c = ch.random_hs_channel(1, rng)
    shots = 100_000
    freq = qpt.simulate_counts(NoisyGateBlackBox(c, rng), shots).frequencies()
    p = qpt.born_probabilities(c.choi)
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / shots))


def test_counts_table_validation():
    with pytest.raises(ValueError):
        qpt.CountsTable(1, 10, np.ones((4, 4), dtype=int))
    with pytest.raises(ValueError):
        qpt.CountsTable(1, 4, -np.ones((4, 4), dtype=int))
    a = qpt.CountsTable(1, 4, np.ones((4, 4), dtype=int))
    m = a.merge(a)
    assert m.shots_per_setting == 8 and np.all(m.counts >= a.counts)


def test_linear_inversion_exact_probabilities(rng):
    for n in (1, 2):
        J = ch.random_hs_channel(n, rng).choi
        assert np.abs(qpt.linear_inversion(qpt.born_probabilities(J)) - J).max() < 1e-10
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    J_id = qpt.linear_inversion(qpt.born_probabilities(ch.identity_channel(2).choi))
    assert np.abs(J_id - np.outer(phi, phi)).max() < 1e-10


def test_linear_inversion_hermitian_unit_trace(rng):
    box = NoisyGateBlackBox(ch.random_hs_channel(2, rng), rng)
    J = qpt.linear_inversion(qpt.simulate_counts(box, 32))
    assert np.abs(J - J.conj().T).max() < 1e-10
    assert abs(np.trace(J) - 1) < 1e-10


def test_linear_inversion_can_leave_cp_set():
    negatives = 0
    for seed in range(100):
        r = np.random.default_rng(seed)
        box = NoisyGateBlackBox(ch.class_pa_channel(1, r), r)
        J = qpt.linear_inversion(qpt.simulate_counts(box, 32))
        negatives += np.linalg.eigvalsh(J).min() < 0
    assert negatives >= 1


def _is_cptp(J, tol=1e-8):
    d = int(round(np.sqrt(J.shape[0])))
    return (np.linalg.eigvalsh(J).min() >= -tol
            and np.abs(ch.partial_trace_output(J) - np.eye(d) / d).max() <= tol)


def test_projection_fixed_point(rng):
    J = ch.random_hs_channel(1, rng).choi
    res = qpt.project_cptp(J)
    assert res.converged and np.abs(res.choi - J).max() < 1e-8


def test_projection_of_perturbed_identity(rng):
    H = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H = H + H.conj().T
    H -= np.trace(H) / 4 * np.eye(4)
    H /= np.linalg.norm(H)
    J = ch.identity_channel(2).choi - 0.05 * H
    assert not _is_cptp(J)
    res = qpt.project_cptp(J)
    assert res.converged and _is_cptp(res.choi)


@pytest.mark.parametrize("dykstra", [True, False])
def test_projection_distance_to_true_choi_decreases(dykstra):
    for seed in range(5):
        r = np.random.default_rng(seed)
        c = ch.class_pa_channel(1, r)
        J_lin = qpt.linear_inversion(qpt.simulate_counts(NoisyGateBlackBox(c, r), 64))
        dists = [np.linalg.norm(J_lin - c.choi)]
        qpt.project_cptp(J_lin, dykstra=dykstra, callback=lambda it, J: dists.append(np.linalg.norm(J - c.choi)))
        assert np.all(np.diff(dists) <= 1e-12)


def test_projection_iteration_cap_is_flagged(rng):
    J = ch.identity_channel(2).choi - 0.3 * np.diag([1, -1, 1, -1]).astype(complex)
    res = qpt.project_cptp(J, max_iter=1)
    assert not res.converged and res.iterations == 1


def test_cg_known_channels():
    f, _ = qpt.minimize_fidelity_cg(ch.identity_channel(2), rng=0)
    assert f == pytest.approx(1.0, abs=1e-9)
    f, _ = qpt.minimize_fidelity_cg(ch.depolarizing_channel(2, 0.2), rng=0)
    assert f == pytest.approx(0.9, abs=1e-6)


def test_cg_matches_bloch_grid():
    r = np.random.default_rng(99)
    for _ in range(100):
        c = ch.random_hs_channel(1, r)
        f_cg, _ = qpt.minimize_fidelity_cg(c, rng=r)
        f_grid, _ = bloch_grid_minimum(c, 1_000_000)
        assert abs(f_cg - f_grid) < 1e-4


def test_bootstrap_sigma_behaviour(rng):
    box = NoisyGateBlackBox(ch.identity_channel(2), rng)
    s = qpt.bootstrap_sigma(qpt.simulate_counts(box, 1000), 50, rng)
    assert 0 < s < 0.05
    exact = qpt.born_probabilities(ch.class_pa_channel(1, rng).choi)
    big = 10**9
    counts = qpt.CountsTable(1, big, np.array([rng.multinomial(big, p) for p in exact]))
    _, psi, _ = qpt.estimate_from_counts(counts, rng=rng)
    assert 0 <= qpt.bootstrap_sigma(counts, 5, rng, starts=[psi]) < 1e-3
    with pytest.raises(ValueError):
        qpt.bootstrap_sigma(counts, 1, rng)


def test_identity_channel_estimation():
    for seed in range(20):
        r = np.random.default_rng(seed)
        res = qpt.run_qpt_estimation(NoisyGateBlackBox(ch.identity_channel(2), r), 0.01, rng=r)
        assert res.converged and abs(res.f_min_estimate - 1) <= 0.01


def test_depolarizing_success_rate():
    ok = 0
    for seed in range(100):
        r = np.random.default_rng(seed)
        res = qpt.run_qpt_estimation(NoisyGateBlackBox(ch.depolarizing_channel(2, 0.1), r), 0.01, rng=r)
        ok += abs(res.f_min_estimate - 0.95) <= 0.01
    assert ok >= 90


def test_uses_follow_doubling_schedule(rng):
    n, s1 = 1, 16
    box = NoisyGateBlackBox(ch.random_hs_channel(n, rng), rng)
    res = qpt.run_qpt_estimation(box, 0.01, qpt.QptConfig(base_shots=s1, bootstrap_B=5), rng)
    assert res.uses == box.uses() == 4**n * s1 * 2 ** (res.rounds - 1)
    for r in res.history:
        assert r.uses == 4**n * s1 * 2 ** (r.round - 1)


def test_round_cap_flags_non_converged(rng):
    box = NoisyGateBlackBox(ch.class_pa_channel(1, rng), rng)
    res = qpt.run_qpt_estimation(box, 0.001, qpt.QptConfig(max_rounds=3, bootstrap_B=5), rng)
    assert not res.converged and res.rounds == 3


def test_deterministic_under_seed():
    c = ch.class_pa_channel(1, np.random.default_rng(4))
    a = qpt.run_qpt_estimation(NoisyGateBlackBox(c, 1), 0.01, rng=2)
    b = qpt.run_qpt_estimation(NoisyGateBlackBox(c, 1), 0.01, rng=2)
    assert repr(a) == repr(b) and a.history == b.history


def test_trajectory_replay_matches_direct_runs():
    c = ch.class_pa_channel(1, np.random.default_rng(5))
    cfg = qpt.QptConfig(bootstrap_B=10, max_rounds=10)
    grid = [0.05, 0.01, 0.002]
    hist = qpt.qpt_trajectory(NoisyGateBlackBox(c, 1), 0.01, cfg, np.random.default_rng(2), grid)
    for g in grid:
        direct = qpt.run_qpt_estimation(NoisyGateBlackBox(c, 1), 0.01, qpt.QptConfig(bootstrap_B=10, max_rounds=10, g_thres=g),
                                        np.random.default_rng(2))
        replay = qpt.stop_round(hist, 0.01, g)
        assert (replay.round, replay.f_min, replay.uses) == (direct.rounds, direct.f_min_estimate, direct.uses)
