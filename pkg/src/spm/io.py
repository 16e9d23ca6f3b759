"""File formats: STF1 tensors, PTS1/CSV point clouds, JSON decompositions.

STF1: magic ``b"STF1"``, uint32-LE order m, uint32-LE length L, then L^m
float64-LE entries in lexicographic order.  PTS1: magic ``b"PTS1"``,
uint32-LE N, uint32-LE L, then N*L float64-LE entries, one point per row.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .tensors import (Block, BlockTermDecomposition, CPDecomposition,
                      as_tensor, check_symmetric)

__all__ = ["save_stf", "load_stf", "save_pts", "load_points",
           "decomposition_to_dict", "decomposition_from_dict",
           "btd_to_dict", "btd_from_dict", "dump_json", "load_json"]

_STF_MAGIC = b"STF1"
_PTS_MAGIC = b"PTS1"


def save_stf(path, T: np.ndarray) -> None:
    T = as_tensor(T)
    with open(path, "wb") as fh:
        fh.write(_STF_MAGIC)
        fh.write(struct.pack("<II", T.ndim, T.shape[0]))
        fh.write(T.astype("<f8", copy=False).tobytes(order="C"))


def load_stf(path, validate: bool = True, tol: float = 1e-10) -> np.ndarray:
    """Load an STF1 tensor; sampled permutation checks validate symmetry."""
    raw = Path(path).read_bytes()
    if raw[:4] != _STF_MAGIC:
        raise FormatError(f"{path}: not an STF1 file")
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header")
    m, L = struct.unpack("<II", raw[4:12])
    count = L**m
    data = np.frombuffer(raw, dtype="<f8", offset=12)
    if data.size != count:
        raise FormatError(f"{path}: expected {count} entries, found {data.size}")
    T = as_tensor(data.astype(np.float64), order=m, length=L)
    if validate and not check_symmetric(T, tol=tol):
        raise FormatError(f"{path}: tensor fails the symmetry check")
    return T


def save_pts(path, points: np.ndarray) -> None:
    Y = np.ascontiguousarray(points, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError("points must be an (N, L) array")
    with open(path, "wb") as fh:
        fh.write(_PTS_MAGIC)
        fh.write(struct.pack("<II", Y.shape[0], Y.shape[1]))
        fh.write(Y.astype("<f8", copy=False).tobytes(order="C"))


def load_points(path) -> np.ndarray:
    """Point cloud from PTS1 binary or CSV text (one point per row)."""
    p = Path(path)
    with p.open("rb") as fh:
        head = fh.read(4)
    if head == _PTS_MAGIC:
        raw = p.read_bytes()
        N, L = struct.unpack("<II", raw[4:12])
        data = np.frombuffer(raw, dtype="<f8", offset=12)
        if data.size != N * L:
            raise FormatError(f"{path}: expected {N * L} values, found {data.size}")
        return data.reshape(N, L).astype(np.float64)
    try:
        Y = np.loadtxt(p, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: not PTS1 and not parseable as CSV ({exc})") from exc
    return Y


# ---------------------------------------------------------------------------
# JSON forms (floats round-trip exactly through repr)

def decomposition_to_dict(d: CPDecomposition, **extra) -> dict:
    out = {
        "rank": d.rank,
        "length": d.length,
        "components": [{"lambda": float(w), "a": a.tolist()}
                       for w, a in d.components()],
    }
    out.update(extra)
    return out


def decomposition_from_dict(obj: dict) -> CPDecomposition:
    comps = obj["components"]
    if len(comps) != obj.get("rank", len(comps)):
        raise FormatError("component count disagrees with the declared rank")
    weights = np.array([c["lambda"] for c in comps], dtype=np.float64)
    if comps:
        factors = np.stack([np.asarray(c["a"], dtype=np.float64)
                            for c in comps], axis=1)
    else:
        factors = np.zeros((obj.get("length", 0), 0))
    return CPDecomposition(weights=weights, factors=factors)


def btd_to_dict(d: BlockTermDecomposition, **extra) -> dict:
    out = {
        "blocks": [{
            "ell": b.dim,
            "order": b.core.ndim,
            "A": b.factor.tolist(),
            "core": b.core.reshape(-1).tolist(),
        } for b in d.blocks],
    }
    out.update(extra)
    return out


def btd_from_dict(obj: dict) -> BlockTermDecomposition:
    blocks = []
    for b in obj["blocks"]:
        A = np.asarray(b["A"], dtype=np.float64)
        core = np.asarray(b["core"], dtype=np.float64).reshape(
            (b["ell"],) * b["order"])
        blocks.append(Block(factor=A, core=core))
    return BlockTermDecomposition(blocks=blocks)


def dump_json(path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
