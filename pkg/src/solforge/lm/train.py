"""Target-masked NLL and the per-stage adapter training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch

from ..errors import NonFiniteLoss, StageMismatch, TargetTruncated
from ..util import derive_seed
from .model import AdapterWeights, TinyLm
from .tokenizer import BpeTokenizer

log = logging.getLogger(__name__)

STAGES = ("CI", "VD", "TI")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: dict = field(default_factory=lambda: {"CI": 10, "VD": 10, "TI": 1})
    lora_r: int = 4
    lora_alpha: float = 32.0
    target_modules: tuple = ("q", "k", "v", "o")
    batch_size: int = 8
    optimizer: str = "sgd"  # "sgd" (plain first-order step) or "adam"
    fresh_adapters_per_stage: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.lora_r <= 0 or self.lora_alpha <= 0 or self.batch_size <= 0:
            raise ValueError("learning_rate, lora_r, lora_alpha and batch_size must be positive")
        if any(v < 0 for v in self.epochs.values()):
            raise ValueError("epochs must be non-negative")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        self.target_modules = tuple(self.target_modules)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["target_modules"] = list(self.target_modules)
        return d


@dataclass
class Encoded:
    ids: list[int]
    n_prefix: int  # positions [0, n_prefix) are start token + input
    record_id: str = ""

    @property
    def n_target(self) -> int:
        return len(self.ids) - self.n_prefix


def encode_pair(tok: BpeTokenizer, input_text: str, target_text: str, context_len: int, record_id: str = "") -> Encoded:
    """``[EOT] input target [EOT]``; the input is cut from the left to fit.

    The leading end-of-text token plays the role of the start symbol, so the
    first target token always has a context position to be predicted from.
    """
    inp = tok.encode(input_text)
    tgt = tok.encode(target_text) + [tok.eot_id]
    if len(tgt) + 1 > context_len:
        raise TargetTruncated(f"target of {len(tgt)} tokens does not fit context {context_len}")
    room = context_len - 1 - len(tgt)
    if len(inp) > room:
        log.debug("left-truncating input of %s by %d tokens", record_id, len(inp) - room)
        inp = inp[len(inp) - room :] if room > 0 else []
    return Encoded([tok.eot_id] + inp + tgt, 1 + len(inp), record_id)


def nll_from_logits(logits: torch.Tensor, ids: torch.Tensor, n_prefix: int) -> torch.Tensor:
    """Sum of -log p over target positions ``n_prefix..n-1`` of one sequence."""
    logp = torch.log_softmax(logits[:-1], dim=-1)
    tgt = ids[1:]
    token_logp = logp.gather(-1, tgt.unsqueeze(-1)).squeeze(-1)
    return -token_logp[n_prefix - 1 :].sum()


def masked_nll(
    model: TinyLm,
    adapters: AdapterWeights | None,
    tok: BpeTokenizer,
    input_text: str,
    target_text: str,
) -> torch.Tensor:
    """Negative log-likelihood of the target given the input (input positions masked)."""
    enc = encode_pair(tok, input_text, target_text, model.cfg.context_len)
    ids = torch.tensor(enc.ids)
    return nll_from_logits(model.logits(ids, adapters), ids, enc.n_prefix)


def _batch_tensors(batch: Sequence[Encoded]) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(e.ids) for e in batch)
    ids = torch.zeros(len(batch), width, dtype=torch.long)
    mask = torch.zeros(len(batch), width - 1)
    for row, e in enumerate(batch):
        ids[row, : len(e.ids)] = torch.tensor(e.ids)
        mask[row, e.n_prefix - 1 : len(e.ids) - 1] = 1.0
    return ids, mask


def batch_record_losses(model: TinyLm, adapters: AdapterWeights | None, batch: Sequence[Encoded]) -> torch.Tensor:
    """Per-record summed target NLL for a right-padded batch."""
    ids, mask = _batch_tensors(batch)
    logits = model.logits(ids, adapters)
    logp = torch.log_softmax(logits[:, :-1], dim=-1)
    token_logp = logp.gather(-1, ids[:, 1:].unsqueeze(-1)).squeeze(-1)
    return -(token_logp * mask.to(token_logp.dtype)).sum(dim=1)


def encode_records(tok: BpeTokenizer, records, context_len: int) -> list[Encoded]:
    return [encode_pair(tok, r.input_text, r.target_text, context_len, r.source_id) for r in records]


@torch.no_grad()
def mean_record_loss(model: TinyLm, adapters: AdapterWeights | None, encoded: Sequence[Encoded], batch_size: int = 16) -> float:
    total = 0.0
    for i in range(0, len(encoded), batch_size):
        total += float(batch_record_losses(model, adapters, encoded[i : i + batch_size]).sum())
    return total / max(len(encoded), 1)


def _optimizer(params, cfg: TrainConfig) -> torch.optim.Optimizer:
    if cfg.optimizer == "adam":
        return torch.optim.Adam(params, lr=cfg.learning_rate)
    return torch.optim.SGD(params, lr=cfg.learning_rate)


def train_stage(
    model: TinyLm,
    adapters: AdapterWeights,
    dataset,
    cfg: TrainConfig,
    stage: str,
    tok: BpeTokenizer,
    on_epoch: Callable[[dict], None] | None = None,
) -> AdapterWeights:
    """Update only the adapter matrices on ``dataset`` for the stage's epochs.

    Base weights stay frozen. Each epoch visits the records in a fresh
    permutation derived from ``(cfg.seed, stage, epoch)``; per-epoch mean
    record loss (measured before each batch's step) goes to ``on_epoch``.
    """
    if stage not in STAGES:
        raise StageMismatch(f"unknown stage {stage!r}")
    wrong = [r.source_id for r in dataset if r.stage != stage]
    if wrong:
        raise StageMismatch(f"{len(wrong)} records are not {stage} records (first: {wrong[0]})")
    epochs = cfg.epochs.get(stage, 0)
    if epochs == 0 or not dataset:
        return adapters
    model.freeze()
    for p in adapters.parameters():
        p.requires_grad_(True)
    encoded = encode_records(tok, dataset, model.cfg.context_len)
    opt = _optimizer(adapters.parameters(), cfg)
    for epoch in range(1, epochs + 1):
        order = np.random.default_rng(derive_seed(cfg.seed, stage, epoch)).permutation(len(encoded))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [encoded[i] for i in order[start : start + cfg.batch_size]]
            losses = batch_record_losses(model, adapters, batch)
            bad = torch.nonzero(~torch.isfinite(losses)).flatten()
            if bad.numel():
                idx = int(bad[0])
                raise NonFiniteLoss(batch[idx].record_id, float(losses[idx].detach()))
            n_tokens = sum(e.n_target for e in batch)
            loss = losses.sum() / n_tokens
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(losses.detach().sum())
        entry = {"stage": stage, "epoch": epoch, "mean_loss": total / len(encoded), "records": len(encoded)}
        log.info("stage %s epoch %d mean loss %.4f", stage, epoch, entry["mean_loss"])
        if not math.isfinite(entry["mean_loss"]):
            raise NonFiniteLoss("<epoch mean>", entry["mean_loss"])
        if on_epoch is not None:
            on_epoch(entry)
    for p in adapters.parameters():
        p.requires_grad_(False)
    return adapters


def pretrain_base(
    model: TinyLm,
    tok: BpeTokenizer,
    texts: Sequence[str],
    epochs: int,
    learning_rate: float = 1e-3,
    batch_size: int = 8,
    seed: int = 0,
    on_epoch: Callable[[dict], None] | None = None,
) -> TinyLm:
    """Full-parameter next-token training of the base weights on raw code.

    Stands in for the large-scale pretraining a real base model arrives with;
    adapters are not involved.
    """
    if epochs <= 0 or not texts:
        return model
    for p in model.parameters():
        p.requires_grad_(True)
    ctx = model.cfg.context_len
    encoded = []
    for i, text in enumerate(texts):
        ids = [tok.eot_id] + tok.encode(text) + [tok.eot_id]
        for start in range(0, max(len(ids) - 1, 1), ctx - 1):
            chunk = ids[start : start + ctx]
            if len(chunk) > 1:
                encoded.append(Encoded(chunk, 1, f"pretrain-{i}"))
    opt = torch.optim.Adam(model.parameters(), lr=learning_rate)
    for epoch in range(1, epochs + 1):
        order = np.random.default_rng(derive_seed(seed, "pretrain", epoch)).permutation(len(encoded))
        total = 0.0
        for start in range(0, len(order), batch_size):
            batch = [encoded[i] for i in order[start : start + batch_size]]
            losses = batch_record_losses(model, None, batch)
            loss = losses.sum() / sum(e.n_target for e in batch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(losses.detach().sum())
        entry = {"stage": "BASE", "epoch": epoch, "mean_loss": total / len(encoded), "records": len(encoded)}
        log.info("base pretraining epoch %d mean loss %.4f", epoch, entry["mean_loss"])
        if on_epoch is not None:
            on_epoch(entry)
    return model.freeze()
