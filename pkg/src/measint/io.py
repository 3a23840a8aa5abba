"""File formats.

Covariance container: one line of JSON header, a newline, then the matrix as
row-major little-endian float64. The header records ``n_modes``,
``ordering="xxpp"``, ``hbar=2``, the squeezing sign convention and an
optional label list.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Union

import numpy as np

from .cluster import DualRailIndex
from .symplectic import GaussianState

MAGIC = "measint-cov"
FORMAT_VERSION = 1
SIGN_CONVENTION = "r>0 squeezes x"

PathLike = Union[str, Path]


def _label_to_json(label):
    if isinstance(label, tuple):
        return list(label)
    return label


def _label_from_json(label):
    if isinstance(label, list):
        if len(label) == 2 and label[0] in ("A", "B") and isinstance(label[1], int):
            return DualRailIndex(label[0], label[1])
        return tuple(label)
    return label


def encode_state(state: GaussianState) -> bytes:
    header = {
        "format": MAGIC,
        "version": FORMAT_VERSION,
        "n_modes": state.n_modes,
        "ordering": "xxpp",
        "hbar": 2,
        "sign_convention": SIGN_CONVENTION,
        "dtype": "<f8",
        "labels": None if state.labels is None else [_label_to_json(lab) for lab in state.labels],
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8") + b"\n"
    return head + np.ascontiguousarray(state.cov, dtype="<f8").tobytes(order="C")


def decode_state(blob: bytes, check: bool = True) -> GaussianState:
    head, sep, body = blob.partition(b"\n")
    if not sep:
        raise ValueError("missing covariance header")
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"unreadable covariance header: {exc}") from None
    if header.get("format") != MAGIC:
        raise ValueError("not a covariance container")
    if header.get("ordering") != "xxpp" or header.get("hbar") != 2:
        raise ValueError("unsupported ordering or hbar convention")
    n = int(header["n_modes"])
    expected = (2 * n) ** 2 * 8
    if len(body) != expected:
        raise ValueError(f"expected {expected} bytes of matrix data, found {len(body)}")
    cov = np.frombuffer(body, dtype="<f8").reshape(2 * n, 2 * n)
    labels = header.get("labels")
    if labels is not None:
        labels = tuple(_label_from_json(lab) for lab in labels)
    return GaussianState(cov, labels=labels, check=check)


def write_state(path: PathLike, state: GaussianState) -> Path:
    path = Path(path)
    path.write_bytes(encode_state(state))
    return path


def read_state(path: PathLike, check: bool = True) -> GaussianState:
    return decode_state(Path(path).read_bytes(), check=check)


def matrix_to_csv(m: np.ndarray) -> str:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return "\n".join(",".join(repr(float(x)) for x in row) for row in m) + "\n"


def write_matrix_csv(path: PathLike, m: np.ndarray) -> Path:
    path = Path(path)
    path.write_text(matrix_to_csv(m))
    return path


def read_matrix_csv(path: PathLike) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_state_csv(path: PathLike, state: GaussianState) -> Path:
    return write_matrix_csv(path, state.cov)


def dumps_json(data) -> str:
    """Deterministic JSON (sorted keys, shortest float repr)."""
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(path: PathLike, data) -> Path:
    path = Path(path)
    path.write_text(dumps_json(data))
    return path


def config_hash(data) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()[:16]
