"""DNT1 tensor files.

Layout (little-endian): 4-byte magic ``DNT1``, ``u32 n``, ``u32 L``,
``u8 kind`` (0 bits, 1 float64), three zero pad bytes, then the ``L``
slices, each ``n x n`` in row-major order.  Bits take one byte per entry.
A JSON sidecar ``<path>.json`` records the kind, shape and pair-order tag.
"""

import json
import struct

import numpy as np

from .core import PAIR_ORDER_VERSION, check_adjacency_tensor
from .errors import DimensionMismatchError, InvalidBasisError
from .transform import TemporalBasis

MAGIC = b"DNT1"
HEADER = struct.Struct("<4sIIB3x")
KINDS = {0: "bits", 1: "f64"}
KIND_CODES = {v: k for k, v in KINDS.items()}


def _sidecar_path(path):
    return f"{path}.json"


def write_tensor(path, tensor, kind=None, extra=None):
    """Write an ``(n, n, L)`` tensor; ``kind`` defaults from the dtype."""
    arr = np.asarray(tensor)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"expected (n, n, L) tensor, got {arr.shape}")
    if kind is None:
        kind = "bits" if arr.dtype in (np.uint8, np.bool_) else "f64"
    n, _, L = arr.shape
    slices = np.ascontiguousarray(arr.transpose(2, 0, 1))
    if kind == "bits":
        check_adjacency_tensor(arr)
        body = slices.astype(np.uint8).tobytes()
    elif kind == "f64":
        body = slices.astype("<f8").tobytes()
    else:
        raise ValueError(f"unknown kind {kind!r}")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, n, L, KIND_CODES[kind]))
        fh.write(body)
    meta = {"format": "DNT1", "pair_order": PAIR_ORDER_VERSION, "kind": kind, "n": n, "L": L}
    if extra:
        meta.update(extra)
    with open(_sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return meta


def read_header(path):
    with open(path, "rb") as fh:
        raw = fh.read(HEADER.size)
    if len(raw) != HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, n, L, code = HEADER.unpack(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if code not in KINDS:
        raise ValueError(f"{path}: unknown kind code {code}")
    return n, L, KINDS[code]


def read_tensor(path):
    """Return the ``(n, n, L)`` array (uint8 for bits, float64 otherwise)."""
    n, L, kind = read_header(path)
    dtype = np.uint8 if kind == "bits" else np.dtype("<f8")
    data = np.fromfile(path, dtype=dtype, offset=HEADER.size)
    if data.size != n * n * L:
        raise ValueError(f"{path}: expected {n * n * L} entries, found {data.size}")
    out = np.ascontiguousarray(data.reshape(L, n, n).transpose(1, 2, 0))
    if kind == "f64":
        out = out.astype(np.float64)
    return out


def read_sidecar(path):
    try:
        with open(_sidecar_path(path)) as fh:
            return json.load(fh)
    except FileNotFoundError:
        return None


def write_basis(path, basis):
    H = basis.matrix if isinstance(basis, TemporalBasis) else np.asarray(basis, dtype=float)
    L = H.shape[0]
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, L, 1, KIND_CODES["f64"]))
        fh.write(np.ascontiguousarray(H).astype("<f8").tobytes())
    with open(_sidecar_path(path), "w") as fh:
        json.dump({"kind": "temporal_basis", "L": L}, fh, indent=2, sort_keys=True)


def read_basis(path):
    n, L, kind = read_header(path)
    meta = read_sidecar(path)
    if kind != "f64" or L != 1:
        raise InvalidBasisError(f"{path}: a basis file must hold one f64 L x L matrix")
    if meta is not None and (meta.get("kind") != "temporal_basis" or meta.get("L") != n):
        raise InvalidBasisError(f"{path}: sidecar does not describe a temporal basis of size {n}")
    H = np.fromfile(path, dtype="<f8", offset=HEADER.size).reshape(n, n)
    return TemporalBasis(H, name=f"file:{path}")
