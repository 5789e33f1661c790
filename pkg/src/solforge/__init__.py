"""Secure Solidity generation pipeline: staged datasets, a tag-conditioned
language model with low-rank adapters, and a BLEU/CodeBLEU/security metric suite."""

__version__ = "0.1.0"
