"""Solidity tokenizer and comment stripper.

Offsets are indices into the Python ``str`` (code points). For the ASCII
sources that make up nearly all Solidity this is the same as the byte offset.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from ..errors import LexError

KEYWORD = "keyword"
IDENTIFIER = "identifier"
NUMBER = "number"
STRING = "string"
PUNCTUATION = "punctuation"
PRAGMA_VERSION = "pragma-version"

ELEMENTARY_TYPES = frozenset(
    ["address", "bool", "string", "bytes", "byte", "var", "fixed", "ufixed", "int", "uint"]
    + [f"uint{n}" for n in range(8, 257, 8)]
    + [f"int{n}" for n in range(8, 257, 8)]
    + [f"bytes{n}" for n in range(1, 33)]
)

KEYWORDS = ELEMENTARY_TYPES | frozenset(
    """
    abstract after alias anonymous apply as assembly auto break calldata case catch
    constant constructor continue contract copyof default define delete do else emit
    enum error event external fallback false final for function hex if immutable
    implements import in indexed inline interface internal is let library macro
    mapping match memory modifier mutable new null of override partial payable pragma
    private promise public pure receive reference relocatable return returns sealed
    sizeof static storage struct supports switch throw true try type typedef typeof
    unchecked unicode using view virtual while
    wei gwei szabo finney ether seconds minutes hours days weeks years
    """.split()
)

# Longest operators first so the alternation is greedy.
_PUNCT = sorted(
    """>>>= >>> <<= >>= ** == != <= >= && || ++ -- += -= *= /= %= |= &= ^= => -> << >> :=
    ( ) { } [ ] ; , . ? : = + - * / % ! ~ & | ^ < > @ #""".split(),
    key=len,
    reverse=True,
)

_MASTER = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<linecomment>//[^\n]*)
  | (?P<blockcomment>/\*)
  | (?P<prefixed_string>(?:hex|unicode)(?=["']))
  | (?P<string>["'])
  | (?P<hexnum>0[xX][0-9a-fA-F_]*)
  | (?P<number>(?:\d[\d_]*(?:\.\d[\d_]*)?|\.\d[\d_]*)(?:[eE]-?\d[\d_]*)?)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<punct>"""
    + "|".join(re.escape(p) for p in _PUNCT)
    + r""")
    """,
    re.VERBOSE,
)

_VERSION = re.compile(r"\d+(?:\.(?:\d+|[*xX]))*")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class ContractSource:
    text: str
    origin: str = "generated"
    label: str | None = None

    def __post_init__(self):
        if not self.text and self.origin != "generated":
            raise ValueError(f"empty source text from {self.origin!r}")


@dataclass(frozen=True)
class TokenStream:
    source: str
    tokens: tuple[Token, ...]
    comments: tuple[tuple[int, int], ...] = field(default=())

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    @property
    def lexemes(self) -> list[str]:
        return [t.text for t in self.tokens]

    def reconstruct(self) -> str:
        """Join lexemes with the original whitespace, leaving comments out."""
        parts = []
        pos = 0
        comment_iter = iter(self.comments)
        pending = next(comment_iter, None)
        for tok in self.tokens:
            gap_start = pos
            # drop comment text inside the gap, keep the whitespace
            while pending is not None and pending[0] < tok.start:
                parts.append(self.source[gap_start : pending[0]])
                gap_start = pending[1]
                pending = next(comment_iter, None)
            parts.append(self.source[gap_start : tok.start])
            parts.append(tok.text)
            pos = tok.end
        gap_start = pos
        while pending is not None:
            parts.append(self.source[gap_start : pending[0]])
            gap_start = pending[1]
            pending = next(comment_iter, None)
        parts.append(self.source[gap_start:])
        return "".join(parts)


def _scan_string(text: str, pos: int) -> int:
    """Return the end offset of the quoted string starting at ``pos``."""
    quote = text[pos]
    i = pos + 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\\":
            i += 2
            continue
        if c == quote:
            return i + 1
        if c == "\n":
            break
        i += 1
    raise LexError("unterminated string literal", pos)


def _as_text(source) -> str:
    return source.text if isinstance(source, ContractSource) else source


def tokenize(source: ContractSource | str, tolerant: bool = False) -> TokenStream:
    """Lex Solidity into tokens. Comments are recorded as skipped spans.

    With ``tolerant=True`` an unterminated string or block comment runs to the
    end of its line / the file instead of raising; the metric code uses this
    on model output.
    """
    text = _as_text(source)
    tokens: list[Token] = []
    comments: list[tuple[int, int]] = []
    pos = 0
    n = len(text)
    in_pragma = False
    while pos < n:
        if in_pragma:
            vm = _VERSION.match(text, pos)
            if vm:
                tokens.append(Token(PRAGMA_VERSION, vm.group(), pos, vm.end()))
                pos = vm.end()
                continue
        m = _MASTER.match(text, pos)
        if m is None:
            # stray character (e.g. a backtick); keep it as punctuation
            tokens.append(Token(PUNCTUATION, text[pos], pos, pos + 1))
            pos += 1
            continue
        group = m.lastgroup
        if group == "ws":
            pos = m.end()
        elif group == "linecomment":
            comments.append((pos, m.end()))
            pos = m.end()
        elif group == "blockcomment":
            end = text.find("*/", pos + 2)
            if end < 0:
                if not tolerant:
                    raise LexError("unterminated block comment", pos)
                end = n - 2
            comments.append((pos, end + 2))
            pos = end + 2
        elif group in ("string", "prefixed_string"):
            qpos = m.end() if group == "prefixed_string" else pos
            try:
                end = _scan_string(text, qpos)
            except LexError:
                if not tolerant:
                    raise
                nl = text.find("\n", qpos)
                end = n if nl < 0 else nl
            tokens.append(Token(STRING, text[pos:end], pos, end))
            pos = end
        elif group in ("hexnum", "number"):
            tokens.append(Token(NUMBER, m.group(), pos, m.end()))
            pos = m.end()
        elif group == "ident":
            word = m.group()
            kind = KEYWORD if word in KEYWORDS else IDENTIFIER
            tokens.append(Token(kind, word, pos, m.end()))
            if word == "pragma":
                in_pragma = True
            pos = m.end()
        else:
            tokens.append(Token(PUNCTUATION, m.group(), pos, m.end()))
            if m.group() == ";":
                in_pragma = False
            pos = m.end()
    return TokenStream(text, tuple(tokens), tuple(comments))


def _is_word_char(c: str) -> bool:
    return c.isalnum() or c in "_$"


def strip_comments(source: ContractSource | str):
    """Remove ``//``, ``/* */`` and NatSpec comments.

    A comment that is alone on its line takes the whole line (and its newline)
    with it. Returns the same type it was given.
    """
    text = _as_text(source)
    stream = tokenize(text)
    if not stream.comments:
        return source
    out = []
    pos = 0
    for start, end in stream.comments:
        if start < pos:
            continue
        line_start = text.rfind("\n", 0, start) + 1
        line_end = text.find("\n", end)
        line_end = len(text) if line_end < 0 else line_end
        before = text[max(pos, line_start) : start]
        after = text[end:line_end]
        whole_line = line_start >= pos and not before.strip() and not after.strip()
        if whole_line:
            out.append(text[pos:line_start])
            # eat the newline too, or the preceding one at end of file
            if line_end < len(text):
                pos = line_end + 1
            else:
                if out and out[-1].endswith("\n"):
                    out[-1] = out[-1][:-1]
                pos = line_end
            continue
        if not after.strip():
            # trailing comment: drop the spaces that led up to it
            out.append(text[pos:start].rstrip(" \t"))
        else:
            out.append(text[pos:start])
        prev = "".join(out)[-1:] if out else ""
        nxt = text[end : end + 1]
        if prev and nxt and _is_word_char(prev) and _is_word_char(nxt):
            out.append(" ")
        pos = end
    out.append(text[pos:])
    stripped = "".join(out)
    if isinstance(source, ContractSource):
        return ContractSource(stripped, source.origin, source.label)
    return stripped
