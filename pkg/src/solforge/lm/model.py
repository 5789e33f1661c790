"""Small decoder-only transformer with optional low-rank adapters."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import SequenceTooLong

ATTENTION_PROJECTIONS = ("q", "k", "v", "o")


@dataclass
class TinyLmConfig:
    vocab_size: int = 518
    embed_dim: int = 128
    num_layers: int = 4
    num_heads: int = 4
    context_len: int = 512
    ffn_mult: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.embed_dim % self.num_heads:
            raise ValueError("embed_dim must be divisible by num_heads")

    def to_dict(self) -> dict:
        return asdict(self)


class AdapterWeights(nn.Module):
    """Low-rank updates ``(alpha / r) * B @ A`` for a set of named matrices.

    ``B`` starts at zero, so a fresh adapter set leaves the model unchanged.
    """

    def __init__(self, shapes: dict[str, tuple[int, int]], r: int = 4, alpha: float = 32.0, seed: int = 0):
        super().__init__()
        for name, (d, k) in shapes.items():
            if r > min(d, k) / 4:
                raise ValueError(f"rank {r} too large for {name} of shape {(d, k)}")
        self.r = r
        self.alpha = float(alpha)
        self.names = list(shapes)
        gen = torch.Generator().manual_seed(seed)
        self.A = nn.ParameterDict()
        self.B = nn.ParameterDict()
        for name, (d, k) in shapes.items():
            key = name.replace(".", "_")
            bound = 1.0 / math.sqrt(k)
            self.A[key] = nn.Parameter((torch.rand(r, k, generator=gen) * 2 - 1) * bound)
            self.B[key] = nn.Parameter(torch.zeros(d, r))

    @property
    def scaling(self) -> float:
        return self.alpha / self.r

    def pair(self, name: str) -> tuple[torch.Tensor, torch.Tensor] | None:
        key = name.replace(".", "_")
        if key not in self.A:
            return None
        return self.B[key], self.A[key]

    def delta(self, name: str) -> torch.Tensor:
        B, A = self.pair(name)
        return self.scaling * (B @ A)


class _Block(nn.Module):
    def __init__(self, cfg: TinyLmConfig):
        super().__init__()
        d = cfg.embed_dim
        self.heads = cfg.num_heads
        self.ln1 = nn.LayerNorm(d)
        self.ln2 = nn.LayerNorm(d)
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.o = nn.Linear(d, d)
        self.fc1 = nn.Linear(d, cfg.ffn_mult * d)
        self.fc2 = nn.Linear(cfg.ffn_mult * d, d)

    @staticmethod
    def _proj(layer: nn.Linear, x: torch.Tensor, adapter) -> torch.Tensor:
        y = F.linear(x, layer.weight, layer.bias)
        if adapter is not None:
            B, A, scale = adapter
            y = y + scale * F.linear(F.linear(x, A), B)
        return y

    def forward(self, x: torch.Tensor, mask: torch.Tensor, adapters: dict) -> torch.Tensor:
        bsz, n, d = x.shape
        h = self.ln1(x)
        q = self._proj(self.q, h, adapters.get("q"))
        k = self._proj(self.k, h, adapters.get("k"))
        v = self._proj(self.v, h, adapters.get("v"))
        hd = d // self.heads
        q = q.view(bsz, n, self.heads, hd).transpose(1, 2)
        k = k.view(bsz, n, self.heads, hd).transpose(1, 2)
        v = v.view(bsz, n, self.heads, hd).transpose(1, 2)
        att = (q @ k.transpose(-2, -1)) / math.sqrt(hd)
        att = att.masked_fill(mask[:n, :n], float("-inf"))
        att = torch.softmax(att, dim=-1)
        y = (att @ v).transpose(1, 2).reshape(bsz, n, d)
        x = x + self._proj(self.o, y, adapters.get("o"))
        x = x + self.fc2(F.gelu(self.fc1(self.ln2(x))))
        return x


class TinyLm(nn.Module):
    """Token embedding, ``num_layers`` pre-norm blocks, and an output head."""

    def __init__(self, cfg: TinyLmConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Embedding(cfg.vocab_size, cfg.embed_dim)
        self.pos = nn.Embedding(cfg.context_len, cfg.embed_dim)
        self.blocks = nn.ModuleList(_Block(cfg) for _ in range(cfg.num_layers))
        self.ln_f = nn.LayerNorm(cfg.embed_dim)
        self.head = nn.Linear(cfg.embed_dim, cfg.vocab_size)
        self.register_buffer(
            "causal", torch.triu(torch.ones(cfg.context_len, cfg.context_len, dtype=torch.bool), diagonal=1), persistent=False
        )
        self._init_weights(cfg.seed)

    def _init_weights(self, seed: int) -> None:
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for name, p in self.named_parameters():
                if name.endswith("bias"):
                    p.zero_()
                elif ".ln" in name or name.startswith("ln_"):
                    p.fill_(1.0)
                else:
                    p.copy_(torch.randn(p.shape, generator=gen) * 0.02)

    def adapter_shapes(self, targets=ATTENTION_PROJECTIONS) -> dict[str, tuple[int, int]]:
        shapes = {}
        for i, block in enumerate(self.blocks):
            for t in targets:
                w = getattr(block, t).weight
                shapes[f"blocks.{i}.{t}"] = tuple(w.shape)
        return shapes

    def new_adapters(self, r: int = 4, alpha: float = 32.0, seed: int = 0, targets=ATTENTION_PROJECTIONS) -> AdapterWeights:
        adapters = AdapterWeights(self.adapter_shapes(targets), r=r, alpha=alpha, seed=seed)
        return adapters.to(self.head.weight.dtype)

    def freeze(self) -> "TinyLm":
        for p in self.parameters():
            p.requires_grad_(False)
        return self

    def logits(self, ids: torch.Tensor, adapters: AdapterWeights | None = None) -> torch.Tensor:
        """Next-token logits for a ``(batch, n)`` (or ``(n,)``) id tensor."""
        squeeze = ids.dim() == 1
        if squeeze:
            ids = ids.unsqueeze(0)
        n = ids.shape[1]
        if n > self.cfg.context_len:
            raise SequenceTooLong(f"sequence of {n} tokens exceeds context {self.cfg.context_len}")
        pos = torch.arange(n)
        x = self.embed(ids) + self.pos(pos)
        for i, block in enumerate(self.blocks):
            per_block = {}
            if adapters is not None:
                for t in ATTENTION_PROJECTIONS:
                    pair = adapters.pair(f"blocks.{i}.{t}")
                    if pair is not None:
                        per_block[t] = (pair[0], pair[1], adapters.scaling)
            x = block(x, self.causal, per_block)
        out = self.head(self.ln_f(x))
        return out[0] if squeeze else out

    def forward(self, ids: torch.Tensor, adapters: AdapterWeights | None = None) -> torch.Tensor:
        """Per-position next-token distributions."""
        return torch.softmax(self.logits(ids, adapters), dim=-1)

    def effective_weight(self, name: str, adapters: AdapterWeights | None) -> torch.Tensor:
        block, proj = name.split(".")[1:]
        w = getattr(self.blocks[int(block)], proj).weight
        if adapters is None or adapters.pair(name) is None:
            return w
        return w + adapters.delta(name)
