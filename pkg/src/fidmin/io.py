"""JSON serialization of channels and tomography counts.

Complex entries are stored as ``[re, im]`` pairs. Python's float repr
round-trips exactly, so reading a written file reproduces the arrays bit
for bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channels import QuantumChannel
from .qpt import CountsTable


class FormatError(ValueError):
    """Malformed channel or counts file."""


def _complex_to_json(A) -> list:
    A = np.asarray(A, dtype=complex)
    return np.stack([A.real, A.imag], axis=-1).tolist()


def _complex_from_json(obj, ndim: int) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"expected nested numeric arrays: {exc}") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise FormatError(f"expected a {ndim}-d array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def channel_to_dict(channel: QuantumChannel) -> dict:
    return {"dim": channel.dim, "kraus": _complex_to_json(channel.kraus)}


def channel_from_dict(obj: dict) -> QuantumChannel:
    if not isinstance(obj, dict):
        raise FormatError("channel file must hold a JSON object")
    unknown = set(obj) - {"dim", "kraus", "choi"}
    if unknown:
        raise FormatError(f"unknown fields: {sorted(unknown)}")
    if ("kraus" in obj) == ("choi" in obj):
        raise FormatError("give exactly one of 'kraus' or 'choi'")
    try:
        if "kraus" in obj:
            ch = QuantumChannel(_complex_from_json(obj["kraus"], 3))
        else:
            ch = QuantumChannel.from_choi(_complex_from_json(obj["choi"], 2))
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    if "dim" in obj and obj["dim"] != ch.dim:
        raise FormatError(f"declared dim {obj['dim']} does not match the operators ({ch.dim})")
    return ch


def save_channel(channel: QuantumChannel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(channel)) + "\n")


def load_channel(path) -> QuantumChannel:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return channel_from_dict(obj)


def counts_to_dict(counts: CountsTable) -> dict:
    return {
        "n_qubits": counts.n_qubits,
        "shots_per_setting": counts.shots_per_setting,
        "rows": counts.counts.tolist(),
    }


def counts_from_dict(obj: dict) -> CountsTable:
    if not isinstance(obj, dict) or set(obj) != {"n_qubits", "shots_per_setting", "rows"}:
        raise FormatError("counts must have exactly n_qubits, shots_per_setting and rows")
    rows = np.array(obj["rows"])
    if rows.dtype.kind not in "iu":
        raise FormatError("counts must be integers")
    try:
        return CountsTable(int(obj["n_qubits"]), int(obj["shots_per_setting"]), rows)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def dumps_counts(counts: CountsTable) -> str:
    return json.dumps(counts_to_dict(counts))


def loads_counts(text: str) -> CountsTable:
    return counts_from_dict(json.loads(text))
