"""Versioned binary checkpoint: JSON header followed by little-endian float32 blobs.

Layout::

    b"SFCK" | u32 version | u64 header length | header (UTF-8 JSON) | tensor bytes

The header stores the model config, tokenizer, stage lineage, rng state and
an index of ``{name, shape, offset}`` entries into the tensor section.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..errors import CheckpointError
from .model import AdapterWeights, TinyLm, TinyLmConfig
from .tokenizer import BpeTokenizer

MAGIC = b"SFCK"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")


@dataclass
class StagedModel:
    """Base weights, tokenizer, current adapters and the stages they went through."""

    model: TinyLm
    tok: BpeTokenizer
    adapters: AdapterWeights | None = None
    lineage: list[str] = field(default_factory=list)
    adapter_cfg: dict = field(default_factory=dict)
    rng_state: dict = field(default_factory=dict)


def _tensor_bytes(t: torch.Tensor) -> bytes:
    return np.ascontiguousarray(t.detach().cpu().numpy(), dtype="<f4").tobytes()


def save_checkpoint(path: str | Path, bundle: StagedModel) -> None:
    tensors: list[tuple[str, torch.Tensor]] = [(f"base/{k}", v) for k, v in bundle.model.state_dict().items()]
    if bundle.adapters is not None:
        for key in sorted(bundle.adapters.A.keys()):
            tensors.append((f"adapter/A/{key}", bundle.adapters.A[key]))
            tensors.append((f"adapter/B/{key}", bundle.adapters.B[key]))
    index, blobs, offset = [], [], 0
    for name, t in tensors:
        data = _tensor_bytes(t)
        index.append({"name": name, "shape": list(t.shape), "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    payload = b"".join(blobs)
    adapters = bundle.adapters
    header = {
        "config": bundle.model.cfg.to_dict(),
        "tokenizer": bundle.tok.to_json(),
        "lineage": list(bundle.lineage),
        "adapter": None
        if adapters is None
        else {"r": adapters.r, "alpha": adapters.alpha, "names": adapters.names, **bundle.adapter_cfg},
        "rng_state": bundle.rng_state,
        "tensors": index,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(head)))
        fh.write(head)
        fh.write(payload)


def load_checkpoint(path: str | Path) -> StagedModel:
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, version, head_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    start = _PREFIX.size + head_len
    try:
        header = json.loads(data[_PREFIX.size : start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header") from exc
    payload = data[start:]
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise CheckpointError(f"{path}: tensor payload does not match its digest")

    def tensor(entry: dict) -> torch.Tensor:
        raw = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        return torch.from_numpy(np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(entry["shape"]))

    model = TinyLm(TinyLmConfig(**header["config"]))
    entries = {e["name"]: e for e in header["tensors"]}
    state = {k[len("base/") :]: tensor(e) for k, e in entries.items() if k.startswith("base/")}
    missing = set(model.state_dict()) - set(state)
    if missing:
        raise CheckpointError(f"{path}: missing base tensors {sorted(missing)[:3]}")
    model.load_state_dict(state)
    model.freeze()
    adapters = None
    meta = header.get("adapter")
    if meta is not None:
        shapes = {}
        for name in meta["names"]:
            key = name.replace(".", "_")
            b_shape, a_shape = entries[f"adapter/B/{key}"]["shape"], entries[f"adapter/A/{key}"]["shape"]
            shapes[name] = (b_shape[0], a_shape[1])
        adapters = AdapterWeights(shapes, r=meta["r"], alpha=meta["alpha"])
        with torch.no_grad():
            for name in meta["names"]:
                key = name.replace(".", "_")
                adapters.A[key].copy_(tensor(entries[f"adapter/A/{key}"]))
                adapters.B[key].copy_(tensor(entries[f"adapter/B/{key}"]))
        for p in adapters.parameters():
            p.requires_grad_(False)
    extra = {k: v for k, v in (meta or {}).items() if k not in ("r", "alpha", "names")}
    return StagedModel(model, BpeTokenizer.from_json(header["tokenizer"]), adapters, header["lineage"], extra, header["rng_state"])
