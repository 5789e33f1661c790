"""CodeBLEU components adapted to Solidity and the Avg/Best aggregation."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

from ..errors import EmptyReference, EmptySamples, LexError, ParseError
from ..frontend.ast import ContractAst
from ..frontend.features import def_use_edges, subtrees
from ..frontend.lexer import strip_comments, tokenize
from ..frontend.parser import parse
from .bleu import DEFAULT, MetricConfig, bleu, code_tokens, weighted_ngram_match

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleScores:
    bleu: float
    cb: float
    ngram: float
    weighted_ngram: float
    ast_match: float
    dataflow_match: float
    parse_failed: bool = False

    @property
    def components(self) -> tuple[float, float, float, float]:
        return (self.ngram, self.weighted_ngram, self.ast_match, self.dataflow_match)

    def to_dict(self) -> dict:
        return asdict(self)


def _as_ast(src: str | ContractAst) -> ContractAst:
    return src if isinstance(src, ContractAst) else parse(tokenize(src))


def _overlap(cand: Counter, ref: Counter) -> int:
    return sum(min(c, ref[key]) for key, c in cand.items())


def ast_match(candidate_src: str | ContractAst, reference_src: str | ContractAst, cfg: MetricConfig = DEFAULT) -> float:
    """Share of candidate subtrees (depth >= 2, names abstracted) also in the reference."""
    cand = subtrees(_as_ast(candidate_src), min_depth=2)
    total = sum(cand.values())
    if total == 0:
        return 0.0
    return _overlap(cand, subtrees(_as_ast(reference_src), min_depth=2)) / total


def dataflow_match(candidate_src: str | ContractAst, reference_src: str | ContractAst) -> float:
    """Share of candidate def-use edges also present in the reference."""
    cand = def_use_edges(_as_ast(candidate_src))
    ref = def_use_edges(_as_ast(reference_src))
    total = sum(cand.values())
    if total == 0:
        return 1.0 if not ref else 0.0
    return _overlap(cand, ref) / total


def codebleu(candidate_src: str, reference_src: str, cfg: MetricConfig = DEFAULT) -> SampleScores:
    """BLEU plus the four weighted CodeBLEU components, on comment-free code.

    A candidate that cannot be lexed or parsed still gets n-gram scores (from
    the tolerant lexer) but zero syntax and dataflow matches, and is flagged.
    """
    reference = strip_comments(reference_src)
    ref_tokens = code_tokens(reference, tolerant=False)
    if not ref_tokens:
        raise EmptyReference("reference has no tokens")
    ref_ast = parse(tokenize(reference))
    try:
        candidate = strip_comments(candidate_src)
    except LexError:
        candidate = candidate_src
    cand_tokens = code_tokens(candidate, tolerant=True)
    ngram = bleu(cand_tokens, ref_tokens, cfg)
    weighted = weighted_ngram_match(cand_tokens, ref_tokens, cfg)
    failed = False
    try:
        cand_ast = parse(tokenize(candidate))
    except (LexError, ParseError) as exc:
        log.debug("candidate does not parse: %s", exc)
        failed = True
        syntax = flow = 0.0
    else:
        syntax = ast_match(cand_ast, ref_ast, cfg)
        flow = dataflow_match(cand_ast, ref_ast)
    a, b, g, d = cfg.codebleu_weights
    cb = a * ngram + b * weighted + g * syntax + d * flow
    return SampleScores(ngram, cb, ngram, weighted, syntax, flow, failed)


def aggregate(samples: Sequence[SampleScores], task_id: str = "") -> tuple[float, float, float, float]:
    """``(AvgBLEU, BestBLEU, AvgCB, BestCB)`` over one task's samples."""
    if not samples:
        raise EmptySamples(f"no samples for task {task_id!r}")
    bleus = [s.bleu for s in samples]
    cbs = [s.cb for s in samples]
    return sum(bleus) / len(bleus), max(bleus), sum(cbs) / len(cbs), max(cbs)
