"""Temperature plus nucleus sampling, and tag-conditioned secure generation."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch

from ..data.builders import SECURITY, TI, ti_input
from ..errors import NotTrained, SequenceTooLong
from .model import AdapterWeights, TinyLm
from .tokenizer import BpeTokenizer

# cumulative sums of probabilities that should hit top_p exactly can land a
# few ulps short of it
_MASS_SLACK = 1e-12


@dataclass(frozen=True)
class SamplerConfig:
    temperature: float = 0.2
    top_p: float = 0.95
    max_new_tokens: int = 384
    seed: int = 0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.max_new_tokens < 0:
            raise ValueError("max_new_tokens must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def nucleus(probs: np.ndarray, top_p: float) -> tuple[np.ndarray, np.ndarray]:
    """Smallest descending-probability prefix whose mass reaches ``top_p``.

    Returns ``(token_ids, renormalised_probs)``; ties keep index order.
    """
    order = np.argsort(-probs, kind="stable")
    mass = np.cumsum(probs[order])
    cut = int(np.searchsorted(mass, top_p - _MASS_SLACK, side="left")) + 1
    keep = order[: min(cut, len(order))]
    kept = probs[keep]
    return keep, kept / kept.sum()


def next_token_distribution(logits: np.ndarray, temperature: float, top_p: float) -> tuple[np.ndarray, np.ndarray] | None:
    """Nucleus of the tempered softmax, or None when the distribution is degenerate."""
    z = np.asarray(logits, dtype=np.float64) / temperature
    if not np.all(np.isfinite(z)):
        return None
    z = z - z.max()
    p = np.exp(z)
    total = p.sum()
    if not np.isfinite(total) or total <= 0:
        return None
    return nucleus(p / total, top_p)


def pick(logits: np.ndarray, temperature: float, top_p: float, rng: np.random.Generator) -> int:
    dist = next_token_distribution(logits, temperature, top_p)
    if dist is None:
        clean = np.nan_to_num(np.asarray(logits, dtype=np.float64), nan=-np.inf)
        return int(np.argmax(clean))
    ids, probs = dist
    if len(ids) == 1:
        return int(ids[0])
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return int(ids[min(idx, len(ids) - 1)])


@torch.no_grad()
def sample_ids(model: TinyLm, adapters: AdapterWeights | None, prompt_ids: list[int], cfg: SamplerConfig, eot_id: int) -> list[int]:
    """Autoregressive sampling from ``prompt_ids``; the window slides once the context is full."""
    ctx = model.cfg.context_len
    if len(prompt_ids) > ctx:
        raise SequenceTooLong(f"prompt of {len(prompt_ids)} tokens exceeds context {ctx}")
    rng = np.random.default_rng(cfg.seed)
    seq = list(prompt_ids)
    out: list[int] = []
    for _ in range(cfg.max_new_tokens):
        window = torch.tensor(seq[-ctx:])
        logits = model.logits(window, adapters)[-1].double().numpy()
        tok = pick(logits, cfg.temperature, cfg.top_p, rng)
        if tok == eot_id:
            break
        out.append(tok)
        seq.append(tok)
    return out


def sample(model: TinyLm, adapters: AdapterWeights | None, tok: BpeTokenizer, prompt: str, cfg: SamplerConfig = SamplerConfig()) -> str:
    """Text continuation of ``prompt`` laid out as at training time (start token, then prompt)."""
    ids = [tok.eot_id] + tok.encode(prompt)
    return tok.decode(sample_ids(model, adapters, ids, cfg, tok.eot_id))


def secure_prompt(instruction: str) -> str:
    return ti_input(instruction.strip(), SECURITY)


def generate_secure(
    model: TinyLm,
    adapters: AdapterWeights | None,
    tok: BpeTokenizer,
    instruction: str,
    lineage: list[str],
    cfg: SamplerConfig = SamplerConfig(),
) -> str:
    """Code for ``instruction`` generated under the security tag."""
    if TI not in lineage:
        raise NotTrained("generation needs a model trained through the instruction stage")
    return sample(model, adapters, tok, secure_prompt(instruction), cfg)
