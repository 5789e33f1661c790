"""BLEU, CodeBLEU for Solidity, and per-task aggregation."""

from .bleu import MetricConfig, bleu, code_tokens, weighted_ngram_match
from .codebleu import SampleScores, aggregate, ast_match, codebleu, dataflow_match

__all__ = [
    "MetricConfig",
    "SampleScores",
    "aggregate",
    "ast_match",
    "bleu",
    "code_tokens",
    "codebleu",
    "dataflow_match",
    "weighted_ngram_match",
]
