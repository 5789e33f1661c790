"""Byte-level BPE vocabulary with the infilling and tag sentinels as atoms."""

from __future__ import annotations

from typing import Iterable

from tokenizers import AddedToken, Tokenizer, decoders, models, pre_tokenizers, trainers

from ..specials import EOT, SPECIAL_TOKENS, TAG_VALUES


class BpeTokenizer:
    def __init__(self, tokenizer: Tokenizer):
        self._tok = tokenizer
        self.eot_id = tokenizer.token_to_id(EOT)
        self.special_ids = {s: tokenizer.token_to_id(s) for s in SPECIAL_TOKENS}

    @classmethod
    def train(cls, texts: Iterable[str], vocab_size: int = 518) -> "BpeTokenizer":
        tok = Tokenizer(models.BPE())
        tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
        tok.decoder = decoders.ByteLevel()
        trainer = trainers.BpeTrainer(
            vocab_size=vocab_size,
            special_tokens=SPECIAL_TOKENS,
            initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
            show_progress=False,
        )
        tok.train_from_iterator(list(texts), trainer)
        # added after training and not special, so decoding keeps them
        tok.add_tokens([AddedToken(v, normalized=False) for v in TAG_VALUES])
        return cls(tok)

    @classmethod
    def from_json(cls, text: str) -> "BpeTokenizer":
        return cls(Tokenizer.from_str(text))

    def to_json(self) -> str:
        return self._tok.to_str()

    @property
    def vocab_size(self) -> int:
        return self._tok.get_vocab_size()

    def encode(self, text: str) -> list[int]:
        return self._tok.encode(text, add_special_tokens=False).ids

    def encode_with_offsets(self, text: str) -> tuple[list[int], list[tuple[int, int]]]:
        enc = self._tok.encode(text, add_special_tokens=False)
        return enc.ids, [tuple(o) for o in enc.offsets]

    def decode(self, ids: list[int], skip_special: bool = True) -> str:
        return self._tok.decode(list(ids), skip_special_tokens=skip_special)
