"""Sentence-level BLEU and its keyword-weighted variant over lexer tokens."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

from ..errors import EmptyReference
from ..frontend.lexer import KEYWORDS, tokenize


@dataclass(frozen=True)
class MetricConfig:
    max_n: int = 4
    codebleu_weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    keyword_weight: float = 4.0
    smoothing_epsilon: float = 1e-9

    def __post_init__(self):
        w = tuple(float(x) for x in self.codebleu_weights)
        object.__setattr__(self, "codebleu_weights", w)
        if len(w) != 4 or any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"codebleu weights must be four non-negative reals summing to 1, got {w}")
        if self.max_n < 1:
            raise ValueError("max_n must be at least 1")
        if self.keyword_weight <= 0 or self.smoothing_epsilon <= 0:
            raise ValueError("keyword_weight and smoothing_epsilon must be positive")


DEFAULT = MetricConfig()


def code_tokens(source: str, tolerant: bool = True) -> list[str]:
    """Lexemes of a code string; the tolerant lexer keeps broken candidates scoreable."""
    return tokenize(source, tolerant=tolerant).lexemes


@lru_cache(maxsize=4096)
def _ngram_tables(tokens: tuple, max_n: int) -> tuple[Counter, ...]:
    """Counts of every order ``1..max_n``; cached since references recur across samples."""
    return tuple(Counter(zip(*(tokens[i:] for i in range(n)))) for n in range(1, max_n + 1))


def _score(candidate: Sequence[str], reference: Sequence[str], cfg: MetricConfig, weight: Callable[[tuple], float] | None) -> float:
    if not reference:
        raise EmptyReference("reference has no tokens")
    if not candidate:
        return 0.0
    # orders longer than the candidate have no n-grams and are left out of the mean
    n_orders = min(cfg.max_n, len(candidate))
    cand_tables = _ngram_tables(tuple(candidate), n_orders)
    ref_tables = _ngram_tables(tuple(reference), n_orders)
    log_sum = 0.0
    for cand, ref in zip(cand_tables, ref_tables):
        if weight is None:
            total = len(candidate) - len(next(iter(cand))) + 1
            matched = sum(min(c, ref[g]) for g, c in cand.items() if g in ref)
        else:
            total = sum(weight(g) * c for g, c in cand.items())
            matched = sum(weight(g) * min(c, ref[g]) for g, c in cand.items() if g in ref)
        log_sum += math.log((matched if matched > 0 else cfg.smoothing_epsilon) / total)
    bp = min(0.0, 1.0 - len(reference) / len(candidate))
    return math.exp(bp + log_sum / n_orders)


def bleu(candidate: Sequence[str], reference: Sequence[str], cfg: MetricConfig = DEFAULT) -> float:
    """Smoothed sentence BLEU with brevity penalty ``exp(min(0, 1 - |ref|/|cand|))``."""
    return _score(candidate, reference, cfg, None)


def weighted_ngram_match(candidate: Sequence[str], reference: Sequence[str], cfg: MetricConfig = DEFAULT) -> float:
    """BLEU where n-grams opening with a keyword count ``keyword_weight`` times."""
    kw = cfg.keyword_weight
    return _score(candidate, reference, cfg, lambda g: kw if g[0] in KEYWORDS else 1.0)
