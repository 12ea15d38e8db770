"""Teacher snapshots and on-disk model checkpoints.

Checkpoint layout (all integers little-endian uint32 unless noted):

    magic        4 bytes  b"MSNT"
    version      uint32   currently 1
    meta_len     uint32   followed by meta_len bytes of UTF-8 JSON
                          {"seed": int, "config": <ModelConfig dict>}
    n_params     uint32
    per parameter, in canonical order:
        name_len uint32, name bytes (UTF-8)
        ndim     uint32, then ndim uint32 dims
        data     little-endian float64, C order

The parameter list must match the config's canonical layout exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..autodiff import ParameterStore
from .net import Model, ModelConfig, param_spec

MAGIC = b"MSNT"
VERSION = 1
_U32 = struct.Struct("<I")


def snapshot(m: Model) -> Model:
    """Frozen deep copy for use as a distillation teacher.

    The copy's tensors are unnamed and grad-free so a backward sweep over
    a graph that touches them can never leak gradients under the student's
    parameter names.
    """
    store = ParameterStore()
    for name, t in m.params.items():
        nt = store.add(name, t.data.copy())
        nt.requires_grad = False
        nt.name = None
    return Model(config=m.config, params=store, seed=m.seed, frozen=True)


def save_checkpoint(m: Model, path) -> None:
    path = Path(path)
    meta = json.dumps({"seed": m.seed, "config": m.config.to_dict()},
                      sort_keys=True).encode()
    parts = [MAGIC, _U32.pack(VERSION), _U32.pack(len(meta)), meta,
             _U32.pack(len(m.params))]
    for name, shape in param_spec(m.config):
        data = m.params[name].data
        if data.shape != shape:
            raise ValueError(f"parameter {name!r} has shape {data.shape}, "
                             f"config expects {shape}")
        nb = name.encode()
        parts.append(_U32.pack(len(nb)))
        parts.append(nb)
        parts.append(_U32.pack(data.ndim))
        parts.extend(_U32.pack(d) for d in data.shape)
        parts.append(np.ascontiguousarray(data, dtype="<f8").tobytes())
    path.write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ValueError("checkpoint truncated")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]


def load_checkpoint(path) -> Model:
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise ValueError("checkpoint magic bytes do not match")
    version = r.u32()
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    meta = json.loads(r.take(r.u32()).decode())
    cfg = ModelConfig.from_dict(meta["config"])
    n_params = r.u32()
    expected = param_spec(cfg)
    if n_params != len(expected):
        raise ValueError(f"checkpoint has {n_params} parameters, "
                         f"config expects {len(expected)}")
    store = ParameterStore()
    for want_name, want_shape in expected:
        name = r.take(r.u32()).decode()
        shape = tuple(r.u32() for _ in range(r.u32()))
        if name != want_name or shape != want_shape:
            raise ValueError(f"checkpoint parameter {name!r} {shape} does not "
                             f"match expected {want_name!r} {want_shape}")
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(count * 8), dtype="<f8").reshape(shape)
        store.add(name, data.astype(np.float64))
    if r.pos != len(r.blob):
        raise ValueError("checkpoint has trailing bytes")
    return Model(config=cfg, params=store, seed=int(meta["seed"]))
