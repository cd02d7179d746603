"""Binary model files: network weights plus the input normalizer.

Layout: magic, version u32, layer count u32 (= number of dims), dims as
u32s, then per layer the row-major little-endian f64 weight matrix followed
by the bias vector, then the normalizer's col_min and col_max (f64, length =
input dim).  Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .features import Normalizer
from .neuralnet import NetworkParams

MODEL_MAGIC = b"FDKG-NN"
MODEL_VERSION = 1


def save_model(net: NetworkParams, normalizer: Normalizer, path: str | Path) -> None:
    if normalizer.col_min.shape[0] != net.layer_dims[0]:
        raise ValueError("normalizer dimension must match the network input dimension")
    dims = net.layer_dims
    with open(Path(path), "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(normalizer.col_min, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(normalizer.col_max, dtype="<f8").tobytes())


def load_model(path: str | Path) -> tuple[NetworkParams, Normalizer]:
    path = Path(path)
    raw = path.read_bytes()
    off = len(MODEL_MAGIC)
    if len(raw) < off + 8:
        raise FormatError(f"{path}: truncated header")
    if raw[:off] != MODEL_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:off]!r}")
    version, n_dims = struct.unpack_from("<II", raw, off)
    off += 8
    if version != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported model version {version}")
    if n_dims < 2 or len(raw) < off + 4 * n_dims:
        raise FormatError(f"{path}: truncated dims block")
    dims = struct.unpack_from(f"<{n_dims}I", raw, off)
    off += 4 * n_dims

    n_params = sum(o * i + o for i, o in zip(dims[:-1], dims[1:]))
    expected = off + 8 * (n_params + 2 * dims[0])
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")

    def take(count: int) -> np.ndarray:
        nonlocal off
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).copy()
        off += 8 * count
        return arr

    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(take(fan_out * fan_in).reshape(fan_out, fan_in))
        biases.append(take(fan_out))
    normalizer = Normalizer(col_min=take(dims[0]), col_max=take(dims[0]))
    net = NetworkParams(layer_dims=dims, weights=weights, biases=biases)
    return net, normalizer
