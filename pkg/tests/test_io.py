import json

import numpy as np
import pytest

from fidmin import channels as ch
from fidmin import qpt
from fidmin.blackbox import NoisyGateBlackBox
from fidmin.io import FormatError, channel_from_dict, dumps_counts, load_channel, loads_counts, save_channel


def test_channel_roundtrip_is_bit_exact(tmp_path, rng):
    for n in (1, 2):
        c = ch.class_pa_channel(n, rng)
        path = tmp_path / f"c{n}.json"
        save_channel(c, path)
        back = load_channel(path)
        assert np.array_equal(back.kraus, c.kraus)
        save_channel(back, tmp_path / "again.json")
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_channel_from_choi_field(rng):
    J = ch.random_hs_channel(1, rng).choi
    pairs = np.stack([J.real, J.imag], axis=-1).tolist()
    c = channel_from_dict({"dim": 2, "choi": pairs})
    assert np.abs(c.choi - J).max() < 1e-12


@pytest.mark.parametrize("obj", [
    [],
    {"dim": 2},
    {"dim": 2, "kraus": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "extra": 1},
    {"dim": 4, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]},
    {"kraus": [[[[1, 0], [0, 0]], [[0, 0], [0.5, 0]]]]},
    {"kraus": "abc"},
])
def test_malformed_channels_rejected(obj):
    with pytest.raises(FormatError):
        channel_from_dict(obj)


def test_invalid_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        load_channel(p)


def test_counts_roundtrip(rng):
    for n in (1, 2):
        counts = qpt.simulate_counts(NoisyGateBlackBox(ch.random_hs_channel(n, rng), rng), 17)
        text = dumps_counts(counts)
        back = loads_counts(text)
        assert np.array_equal(back.counts, counts.counts)
        assert (back.n_qubits, back.shots_per_setting) == (n, 17)
        assert dumps_counts(back) == text


@pytest.mark.parametrize("obj", [
    {"n_qubits": 1, "shots_per_setting": 2, "rows": [[1, 1, 0, 0]] * 3},
    {"n_qubits": 1, "shots_per_setting": 2, "rows": [[1.0, 1.0, 0.0, 0.0]] * 4},
    {"n_qubits": 1, "shots_per_setting": 3, "rows": [[1, 1, 0, 0]] * 4},
    {"n_qubits": 1, "rows": [[1, 1, 0, 0]] * 4},
])
def test_malformed_counts_rejected(obj):
    with pytest.raises(FormatError):
        loads_counts(json.dumps(obj))
