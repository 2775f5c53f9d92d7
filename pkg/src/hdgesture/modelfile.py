"""Binary model file.

Layout, all integers little-endian::

    magic        4 bytes  b"HDCM"
    version      u8       1
    architecture u8       0 direct, 1 dual, 2 ctx-ortho, 3 ctx-cim
    dim, G, P    u32 x 3
    n_channels   u32
    seed         u64
    meta         u32 length + UTF-8 JSON (labels, position-classifier config)
    n_cims       u8, then per CIM: levels u32, d_max f64
    n_memories   u32, then per associative memory:
                   n_added  i32[G]
                   counts   i32[G * dim]
                   protos   u64[G * ceil(dim / 64)]
    has_linear   u8, then if 1: n u32, weights f32[n * 3], biases f32[n]
    checksum     8 bytes  blake2b-64 of everything before it

Item, context and continuous item memories are not stored. They are
regenerated from the seed on load.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from pathlib import Path

import numpy as np

from . import hv
from .architectures import (Architecture, Model, ModelConfig, _am_seed, cims_for,
                            context_memory_for, item_memory_for)
from .errors import BadMagicError, ChecksumError, ContractViolation, MalformedFileError, VersionError
from .memories import AssociativeMemory
from .position import LinearPositionModel

MAGIC = b"HDCM"
VERSION = 1
ARCH_TAGS = [Architecture.DIRECT, Architecture.DUAL, Architecture.CTX_ORTHO, Architecture.CTX_CIM]
_HEAD = struct.Struct("<4sBBIIIIQ")
_I32 = np.iinfo(np.int32)


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=8).digest()


def to_bytes(model: Model) -> bytes:
    G, P = len(model.gesture_ids), len(model.position_ids)
    out = io.BytesIO()
    out.write(_HEAD.pack(MAGIC, VERSION, ARCH_TAGS.index(model.architecture), model.dim, G, P,
                         model.config.n_channels, model.seed))
    cfg = model.config.to_dict()
    meta = {"gesture_ids": model.gesture_ids, "position_ids": model.position_ids,
            "position_config": cfg["position"]}
    if model.position_model is not None:
        meta["position_model_ids"] = list(model.position_model.position_ids)
    blob = json.dumps(meta, sort_keys=True, default=_json_scalar).encode()
    out.write(struct.pack("<I", len(blob)))
    out.write(blob)

    out.write(struct.pack("<B", len(model.config.cim_params)))
    for c in model.config.cim_params:
        out.write(struct.pack("<Id", c.levels, c.d_max))

    out.write(struct.pack("<I", len(model.ams)))
    for am in model.ams:
        if not am.finalized:
            raise ContractViolation("only trained models can be saved")
        if np.abs(am.counts).max(initial=0) > _I32.max or am.n_added.max(initial=0) > _I32.max:
            raise ContractViolation("accumulators exceed the 32-bit file format")
        out.write(am.n_added.astype("<i4").tobytes())
        out.write(am.counts.astype("<i4").tobytes())
        out.write(am.prototypes.astype("<u8").tobytes())

    pm = model.position_model
    out.write(struct.pack("<B", pm is not None))
    if pm is not None:
        out.write(struct.pack("<I", pm.weights.shape[0]))
        out.write(pm.weights.astype("<f4").tobytes())
        out.write(pm.biases.astype("<f4").tobytes())
    data = out.getvalue()
    return data + _checksum(data)


def _json_scalar(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot store label {x!r}")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedFileError("model file is truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).copy()


def from_bytes(data: bytes) -> Model:
    """Rebuild a model; raises a distinct error for each kind of damage."""
    if len(data) < 5:
        raise MalformedFileError("model file is truncated")
    if data[:4] != MAGIC:
        raise BadMagicError(f"not a model file (magic {data[:4]!r})")
    if data[4] != VERSION:
        raise VersionError(f"model file version {data[4]} is not supported (expected {VERSION})")
    if len(data) < _HEAD.size + 8:
        raise MalformedFileError("model file is truncated")
    body, digest = data[:-8], data[-8:]
    if _checksum(body) != digest:
        raise ChecksumError("model file checksum mismatch")

    r = _Reader(body)
    _, _, tag, dim, G, P, n_channels, seed = r.unpack(_HEAD.format)
    if tag >= len(ARCH_TAGS):
        raise MalformedFileError(f"unknown architecture tag {tag}")
    arch = ARCH_TAGS[tag]
    (n_meta,) = r.unpack("<I")
    try:
        meta = json.loads(r.take(n_meta).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedFileError(f"bad metadata block: {e}") from None
    (n_cims,) = r.unpack("<B")
    cim_params = [list(r.unpack("<Id")) for _ in range(n_cims)]
    config = ModelConfig.from_dict({"dim": dim, "n_channels": n_channels, "cim_params": cim_params,
                                    "position": meta["position_config"]})
    gesture_ids, position_ids = meta["gesture_ids"], meta["position_ids"]
    if len(gesture_ids) != G or len(position_ids) != P:
        raise MalformedFileError("label counts disagree with the header")

    (n_ams,) = r.unpack("<I")
    ams = []
    for i in range(n_ams):
        am = AssociativeMemory(gesture_ids, dim, _am_seed(seed, i))
        am.n_added = r.array("<i4", G).astype(np.int64)
        am.counts = r.array("<i4", G * dim).astype(np.int64).reshape(G, dim)
        am.prototypes = r.array("<u8", G * hv.n_words(dim)).reshape(G, -1).astype(hv.WORD)
        ams.append(am)

    (has_pm,) = r.unpack("<B")
    pm = None
    if has_pm:
        (n,) = r.unpack("<I")
        w = r.array("<f4", n * 3).reshape(n, 3)
        b = r.array("<f4", n)
        pm = LinearPositionModel(w, b, meta.get("position_model_ids", position_ids))
    if r.pos != len(body):
        raise MalformedFileError("trailing bytes after model data")

    cm = context_memory_for(seed, position_ids, dim) if arch is Architecture.CTX_ORTHO else None
    cims = cims_for(seed, config.cim_params, dim) if arch is Architecture.CTX_CIM else None
    try:
        return Model(arch, seed, config, gesture_ids, position_ids, item_memory_for(seed, config),
                     ams, cm, cims, pm)
    except ContractViolation as e:
        raise MalformedFileError(str(e)) from None


def save_model(model: Model, path) -> Path:
    path = Path(path)
    path.write_bytes(to_bytes(model))
    return path


def load_model(path) -> Model:
    return from_bytes(Path(path).read_bytes())
