"""The three staged datasets: code infilling, detection, tag-guided instruction."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ..errors import MissingInstruction, SentinelInSource, TooFew, TooShort
from ..frontend.lexer import ContractSource, Token, strip_comments, tokenize
from ..specials import EOT, MID, PRE, SUF, TAG_CLOSE, TAG_OPEN
from ..util import derive_seed, rng_for

log = logging.getLogger(__name__)

PSM, SPM = "PSM", "SPM"
CI, VD, TI = "CI", "VD", "TI"
SECURITY, VULNERABLE, NONE = "security", "vulnerable", "none"

VD_PROMPT = "whether this smart contract Code is a correct solution:"
TI_PROMPT = "Please give the contract code"
RESERVED = (PRE, SUF, MID, TAG_OPEN, TAG_CLOSE, EOT)
INFILLS_PER_CONTRACT = 5


def tag_block(label: str) -> str:
    if label not in (SECURITY, VULNERABLE):
        raise ValueError(f"unknown label {label!r}")
    return f"{TAG_OPEN}<{label}>{TAG_CLOSE}"


@dataclass(frozen=True)
class InfillExample:
    """One split of a contract into prefix, middle and suffix tokens.

    ``text`` is the (comment-stripped) source the tokens index into; the
    rendered pieces keep the original whitespace between tokens.
    """

    text: str
    tokens: tuple[Token, ...]
    j: int
    k: int
    mode: str
    source_id: str = ""

    def __post_init__(self):
        if not 0 <= self.j <= self.k <= len(self.tokens):
            raise ValueError("need 0 <= j <= k <= n")
        if self.mode not in (PSM, SPM):
            raise ValueError(f"mode must be PSM or SPM, not {self.mode!r}")

    @property
    def pre(self) -> tuple[Token, ...]:
        return self.tokens[: self.j]

    @property
    def mid(self) -> tuple[Token, ...]:
        return self.tokens[self.j : self.k]

    @property
    def suf(self) -> tuple[Token, ...]:
        return self.tokens[self.k :]

    def _offset(self, index: int) -> int:
        return self.tokens[index].start if index < len(self.tokens) else len(self.text)

    @property
    def pre_text(self) -> str:
        return self.text[: self._offset(self.j)]

    @property
    def mid_text(self) -> str:
        return self.text[self._offset(self.j) : self._offset(self.k)]

    @property
    def suf_text(self) -> str:
        return self.text[self._offset(self.k) :]


@dataclass(frozen=True)
class TrainingRecord:
    stage: str
    input_text: str
    target_text: str
    tag: str
    source_id: str

    def __post_init__(self):
        if self.stage == VD and self.target_text not in (tag_block(SECURITY), tag_block(VULNERABLE)):
            raise ValueError("VD target must be a tag block")
        if self.stage == TI and (self.tag == NONE or not self.input_text.endswith(tag_block(self.tag))):
            raise ValueError("TI input must end with its tag block")
        if self.stage == CI and self.tag != NONE:
            raise ValueError("CI records carry no tag")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingRecord":
        return cls(d["stage"], d["input_text"], d["target_text"], d["tag"], d["source_id"])


@dataclass
class DatasetSplit:
    train: list[TrainingRecord]
    valid: list[TrainingRecord]
    test: list[TrainingRecord]
    seed: int = 0

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.valid), len(self.test)


class InstructionExample(NamedTuple):
    instruction: str
    code: str
    label: str
    source_id: str = ""


def split_five_segments(tokens: Sequence, rng_seed) -> tuple[int, int]:
    """Draw ``j`` from the second fifth and ``k`` from the fourth fifth.

    With ``s = n // 5``: ``j`` is uniform on ``[s, 2s)`` and ``k`` on
    ``[3s, 4s)``; leftover tokens belong to the last fifth.
    """
    n = len(tokens)
    if n < 10:
        raise TooShort(f"need at least 10 tokens, got {n}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    s = n // 5
    j = int(rng.integers(s, 2 * s))
    k = int(rng.integers(3 * s, 4 * s))
    return j, k


def render_infill_parts(pre: str, mid: str, suf: str, mode: str) -> tuple[str, str]:
    if mode == PSM:
        return f"{PRE}{pre}{SUF}{suf}{MID}", mid
    if mode == SPM:
        return f"{PRE}{SUF}{suf}{MID}{pre}", mid
    raise ValueError(f"unknown infill mode {mode!r}")


def render_infill(example: InfillExample) -> tuple[str, str]:
    """``(input_text, target_text)`` for the example's PSM or SPM layout."""
    return render_infill_parts(example.pre_text, example.mid_text, example.suf_text, example.mode)


def _check_sentinels(text: str, source_id: str) -> None:
    for s in RESERVED:
        if s in text:
            raise SentinelInSource(f"{source_id}: source contains reserved string {s!r}")


def _prepared(source: ContractSource) -> str | None:
    try:
        text = strip_comments(source.text)
        _check_sentinels(text, source.origin)
    except Exception as exc:  # LexError or SentinelInSource
        log.warning("skipping %s: %s", source.origin, exc)
        return None
    return text


def infill_examples(source: ContractSource, seed: int, count: int = INFILLS_PER_CONTRACT) -> list[InfillExample]:
    """``count`` independent splits of one contract, rng keyed by (seed, id)."""
    text = strip_comments(source.text)
    _check_sentinels(text, source.origin)
    tokens = tokenize(text).tokens
    rng = rng_for(seed, "ci", source.origin)
    out = []
    for m in range(count):
        j, k = split_five_segments(tokens, rng)
        mode = PSM if rng.random() < 0.5 else SPM
        out.append(InfillExample(text, tokens, j, k, mode, f"{source.origin}#{m}"))
    return out


def _shuffled(records: list, seed: int, purpose: str) -> list:
    perm = np.random.default_rng(derive_seed(seed, purpose)).permutation(len(records))
    return [records[i] for i in perm]


def build_ci_dataset(corpus: Iterable[ContractSource], seed: int) -> list[TrainingRecord]:
    """Five infilling records per secure contract, uniformly shuffled."""
    records = []
    for source in corpus:
        if source.label not in (None, SECURITY):
            raise ValueError(f"{source.origin}: infilling uses secure contracts only")
        try:
            examples = infill_examples(source, seed)
        except (TooShort, SentinelInSource) as exc:
            log.warning("skipping %s: %s", source.origin, exc)
            continue
        for ex in examples:
            inp, tgt = render_infill(ex)
            records.append(TrainingRecord(CI, inp, tgt, NONE, ex.source_id))
    return _shuffled(records, seed, "ci-shuffle")


def build_vd_dataset(corpus: Iterable[ContractSource]) -> list[TrainingRecord]:
    records = []
    for source in corpus:
        if source.label not in (SECURITY, VULNERABLE):
            raise ValueError(f"{source.origin}: unlabeled contract")
        text = _prepared(source)
        if text is None:
            continue
        records.append(TrainingRecord(VD, f"{text}\n{VD_PROMPT}", tag_block(source.label), source.label, source.origin))
    return records


def ti_input(instruction: str, label: str) -> str:
    return f"{instruction}\n{TI_PROMPT}\n{tag_block(label)}"


def build_ti_dataset(corpus: Iterable) -> list[TrainingRecord]:
    """Records from ``(instruction, code, label[, source_id])`` tuples."""
    records = []
    for item in corpus:
        ex = InstructionExample(*item)
        if not ex.instruction.strip():
            raise MissingInstruction(f"empty instruction for {ex.source_id or 'contract'}")
        _check_sentinels(ex.code, ex.source_id)
        records.append(TrainingRecord(TI, ti_input(ex.instruction.strip(), ex.label), ex.code, ex.label, ex.source_id))
    return records


def split_811(records: Sequence[TrainingRecord], seed: int) -> DatasetSplit:
    """Shuffle, then carve ``N // 10`` records each for validation and test."""
    n = len(records)
    if n < 10:
        raise TooFew(f"need at least 10 records, got {n}")
    shuffled = _shuffled(list(records), seed, "split-811")
    m = n // 10
    return DatasetSplit(train=shuffled[2 * m :], valid=shuffled[:m], test=shuffled[m : 2 * m], seed=seed)
