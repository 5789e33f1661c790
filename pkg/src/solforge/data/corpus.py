"""Corpus loading, multi-contract filtering and instruction extraction."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import LexError, ParseError
from ..frontend.lexer import ContractSource, strip_comments, tokenize
from ..frontend.parser import is_single_contract, parse
from .builders import InstructionExample

log = logging.getLogger(__name__)

_NATSPEC_TAG = re.compile(r"^@(title|notice|dev|author|custom:\S+)\s*")


def load_labels(path: str | Path) -> dict[str, str]:
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            if row["label"] not in ("security", "vulnerable"):
                raise ValueError(f"{path}:{lineno}: bad label {row['label']!r}")
            labels[row["id"]] = row["label"]
    return labels


def load_corpus(corpus_dir: str | Path, labels_path: str | Path | None = None) -> list[ContractSource]:
    """Read every ``*.sol`` under ``corpus_dir`` (sorted), attaching labels.

    The contract id is the path relative to ``corpus_dir`` without suffix.
    """
    corpus_dir = Path(corpus_dir)
    labels = load_labels(labels_path) if labels_path else {}
    out = []
    for path in sorted(corpus_dir.rglob("*.sol")):
        cid = path.relative_to(corpus_dir).with_suffix("").as_posix()
        text = path.read_text(encoding="utf-8", errors="strict")
        out.append(ContractSource(text, cid, labels.get(cid)))
    return out


@dataclass
class FilterStats:
    total: int = 0
    kept: int = 0
    dropped_multi_contract: int = 0
    dropped_unparseable: int = 0
    dropped_ids: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "dropped": {"multi-contract": self.dropped_multi_contract, "unparseable": self.dropped_unparseable},
        }


def filter_single_contract(corpus: list[ContractSource]) -> tuple[list[ContractSource], FilterStats]:
    """Keep files declaring exactly one contract, library or interface."""
    stats = FilterStats(total=len(corpus))
    kept = []
    for src in corpus:
        try:
            ast = parse(tokenize(strip_comments(src.text)))
        except (LexError, ParseError) as exc:
            stats.dropped_unparseable += 1
            stats.dropped_ids[src.origin] = f"unparseable: {exc}"
            continue
        if not is_single_contract(ast):
            stats.dropped_multi_contract += 1
            stats.dropped_ids[src.origin] = "multi-contract"
            continue
        kept.append(src)
    stats.kept = len(kept)
    return kept, stats


def _clean_comment(raw: str) -> list[str]:
    if raw.startswith("//"):
        body = [raw.lstrip("/")]
    else:
        body = raw[2:-2].lstrip("*").splitlines()
    lines = []
    for line in body:
        line = line.strip().lstrip("*").strip()
        line = _NATSPEC_TAG.sub("", line)
        if not line or line.startswith("SPDX-License-Identifier") or line.startswith("@author"):
            continue
        lines.append(line)
    return lines


def extract_instruction(text: str) -> str:
    """Contiguous comment block directly above the first contract declaration.

    Comment markers and NatSpec tags are removed and lines joined by spaces.
    Returns ``""`` when the declaration has no such block.
    """
    stream = tokenize(text)
    decl = None
    for idx, tok in enumerate(stream.tokens):
        if tok.kind == "keyword" and tok.text in ("contract", "library", "interface"):
            prev = stream.tokens[idx - 1] if idx else None
            decl = prev.start if prev is not None and prev.text == "abstract" else tok.start
            break
    if decl is None:
        return ""
    block = []
    cursor = decl
    for start, end in reversed(stream.comments):
        if end > cursor:
            continue
        if text[end:cursor].strip():
            break
        block.append(text[start:end])
        cursor = start
    lines = []
    for raw in reversed(block):
        lines.extend(_clean_comment(raw))
    return " ".join(lines).strip()


def instruction_examples(corpus: list[ContractSource]) -> list[InstructionExample]:
    """TI triples; contracts without a leading comment block are dropped."""
    out = []
    for src in corpus:
        try:
            instruction = extract_instruction(src.text)
            code = strip_comments(src.text)
        except LexError as exc:
            log.warning("skipping %s: %s", src.origin, exc)
            continue
        if not instruction:
            log.info("no instruction comment in %s; dropped from TI", src.origin)
            continue
        out.append(InstructionExample(instruction, code, src.label, src.origin))
    return out
