"""Stage chaining on top of a pretrained base, plus the scoring probes used to judge it."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import torch

from ..data.builders import SECURITY, TI_PROMPT, VD_PROMPT, VULNERABLE, tag_block
from ..util import derive_seed
from .checkpoint import StagedModel
from .model import TinyLm, TinyLmConfig
from .tokenizer import BpeTokenizer
from .train import TrainConfig, encode_pair, nll_from_logits, pretrain_base, train_stage

log = logging.getLogger(__name__)

# Every prompt followed by every tag block. Mixed into base pretraining so the
# fixed task strings are familiar before any adapter is trained.
PROMPT_TEXTS = [f"{p}\n{tag_block(label)}" for p in (VD_PROMPT, TI_PROMPT) for label in (SECURITY, VULNERABLE)]


def init_base(
    tok: BpeTokenizer,
    model_cfg: TinyLmConfig,
    pretrain_texts: Sequence[str],
    pretrain_epochs: int,
    learning_rate: float = 1e-3,
    seed: int = 0,
    on_epoch: Callable[[dict], None] | None = None,
    prompt_repeats: int = 10,
) -> StagedModel:
    """Fresh base model, briefly pretrained on raw code, with no adapters yet.

    ``prompt_repeats`` copies of PROMPT_TEXTS join the pretraining texts.
    """
    if model_cfg.vocab_size != tok.vocab_size:
        model_cfg = TinyLmConfig(**{**model_cfg.to_dict(), "vocab_size": tok.vocab_size})
    model = TinyLm(model_cfg)
    texts = list(pretrain_texts) + PROMPT_TEXTS * prompt_repeats
    pretrain_base(model, tok, texts, pretrain_epochs, learning_rate, seed=seed, on_epoch=on_epoch)
    model.freeze()
    return StagedModel(model, tok, rng_state={"seed": seed, "pretrain_epochs": pretrain_epochs})


def run_stage(
    bundle: StagedModel,
    records,
    cfg: TrainConfig,
    stage: str,
    on_epoch: Callable[[dict], None] | None = None,
) -> StagedModel:
    """Train one stage's adapters, continuing from the previous stage unless asked not to."""
    if bundle.adapters is None or cfg.fresh_adapters_per_stage:
        adapters = bundle.model.new_adapters(
            r=cfg.lora_r, alpha=cfg.lora_alpha, seed=derive_seed(cfg.seed, "adapters", stage) % 2**31, targets=cfg.target_modules
        )
        lineage = [stage] if cfg.fresh_adapters_per_stage else bundle.lineage + [stage]
    else:
        adapters = bundle.adapters
        lineage = bundle.lineage + [stage]
    train_stage(bundle.model, adapters, records, cfg, stage, bundle.tok, on_epoch)
    rng_state = {**bundle.rng_state, "train_seed": cfg.seed}
    return StagedModel(bundle.model, bundle.tok, adapters, lineage, {"target_modules": list(cfg.target_modules)}, rng_state)


@torch.no_grad()
def target_nll(bundle: StagedModel, input_text: str, target_text: str) -> float:
    enc = encode_pair(bundle.tok, input_text, target_text, bundle.model.cfg.context_len)
    ids = torch.tensor(enc.ids)
    return float(nll_from_logits(bundle.model.logits(ids, bundle.adapters), ids, enc.n_prefix))


def classify(bundle: StagedModel, code: str) -> str:
    """Detection verdict: the tag block with the lower NLL after the detection prompt."""
    prompt = f"{code}\n{VD_PROMPT}"
    scores = {label: target_nll(bundle, prompt, tag_block(label)) for label in (SECURITY, VULNERABLE)}
    return min(scores, key=lambda k: (scores[k], k))


@torch.no_grad()
def continuation_logprob(bundle: StagedModel, input_text: str, target_prefix: str, continuation: str) -> float:
    """Mean per-token log-probability of ``continuation`` written after ``target_prefix``.

    The target side is tokenised as one string, as during training, and the
    tokens overlapping the continuation are the ones scored.
    """
    tok = bundle.tok
    inp = tok.encode(input_text)
    tgt, offsets = tok.encode_with_offsets(target_prefix + continuation)
    boundary = len(target_prefix)
    first = next(i for i, (_, end) in enumerate(offsets) if end > boundary)
    ids = [tok.eot_id] + inp + tgt
    ctx = bundle.model.cfg.context_len
    cut = max(0, len(ids) - ctx)
    window = torch.tensor(ids[cut:])
    logp = torch.log_softmax(bundle.model.logits(window, bundle.adapters), dim=-1)
    positions = [1 + len(inp) + i - cut for i in range(first, len(tgt))]
    values = [float(logp[p - 1, ids[p + cut]]) for p in positions]
    return sum(values) / len(values)
