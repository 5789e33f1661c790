import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solforge.errors import LexError, ParseError
from solforge.frontend import (
    ContractSource,
    def_use_edges,
    is_single_contract,
    parse,
    strip_comments,
    subtrees,
    tokenize,
)
from solforge.frontend.lexer import KEYWORD, NUMBER, PRAGMA_VERSION, STRING
from solforge.toy import make_toy_corpus

from conftest import ETHER_STORE, SIMPLE


def test_token_kinds_and_offsets():
    stream = tokenize(SIMPLE)
    for tok in stream:
        assert SIMPLE[tok.start : tok.end] == tok.text
    kinds = {t.text: t.kind for t in stream}
    assert kinds["contract"] == KEYWORD
    assert kinds["uint256"] == KEYWORD
    assert kinds["^"] != PRAGMA_VERSION
    assert any(t.kind == PRAGMA_VERSION and t.text == "0.8.0" for t in stream)
    assert len(stream.comments) == 3


def test_strings_and_numbers():
    stream = tokenize('x = "a\\"b"; y = 0x1F; z = 1e18; w = hex"00ff";')
    assert [t.kind for t in stream if t.kind in (STRING, NUMBER)] == [STRING, NUMBER, NUMBER, STRING]


def test_unterminated_string_raises_or_tolerates():
    with pytest.raises(LexError):
        tokenize('string s = "abc;\n')
    stream = tokenize('string s = "abc;\nuint x;', tolerant=True)
    assert stream.lexemes[-3:] == ["uint", "x", ";"]


def test_unterminated_block_comment():
    with pytest.raises(LexError):
        tokenize("uint x; /* open")
    assert tokenize("uint x; /* open", tolerant=True).lexemes == ["uint", "x", ";"]


def test_strip_comments_removes_whole_comment_lines():
    out = strip_comments(SIMPLE)
    assert "//" not in out and "/*" not in out and "@title" not in out
    assert "    uint256 public count;\n" in out
    assert "\n\n    function inc" in out
    assert tokenize(out).lexemes == tokenize(SIMPLE).lexemes


def test_strip_comments_keeps_type():
    src = ContractSource("contract A {} // x", "a.sol", "security")
    out = strip_comments(src)
    assert isinstance(out, ContractSource) and out.label == "security"
    assert out.text.rstrip() == "contract A {}"


def test_comment_markers_inside_strings_survive():
    src = 'string s = "http://x/*y*/"; // gone\n'
    assert strip_comments(src) == 'string s = "http://x/*y*/";\n'


_PIECES = ["uint x;", "x = x + 1;", '"s//t"', "'/*q*/'", "a.b(c);", "{", "}", "\n", "  ", "if (a) { b; }"]
_COMMENTS = ["// note", "/* block */", "/// @notice doc", "/** multi\n line */"]


def test_strip_comments_fuzz_preserves_tokens():
    rng = random.Random(7)
    for _ in range(50):
        parts = []
        for _ in range(rng.randint(3, 15)):
            parts.append(rng.choice(_PIECES))
            if rng.random() < 0.4:
                c = rng.choice(_COMMENTS)
                parts.append(c + ("\n" if c.startswith("//") else ""))
        text = " ".join(parts)
        out = strip_comments(text)
        assert tokenize(out).lexemes == tokenize(text).lexemes
        assert tokenize(out).comments == ()


@settings(max_examples=60, deadline=None)
@given(st.text(alphabet="abc xyz019;(){}=+-*/\n\"'", max_size=60))
def test_tolerant_lexer_never_raises_and_covers_text(text):
    stream = tokenize(text, tolerant=True)
    covered = "".join(t.text for t in stream)
    assert len(covered) <= len(text)
    for a, b in zip(stream.tokens, stream.tokens[1:]):
        assert a.end <= b.start


def test_parse_ether_store():
    ast = parse(ETHER_STORE)
    assert ast.clean
    assert is_single_contract(ast)
    names = [f.name for f in ast.functions()]
    assert names == ["depositFunds", "withdrawFunds"]
    withdraw = ast.functions()[1]
    assert len(withdraw.find("Require")) == 4
    assert withdraw.find("Call")


def test_parse_modern_constructs():
    src = """
    pragma solidity ^0.8.0;
    import "./X.sol";
    interface I { function f() external; }
    library L { function g(uint a) internal pure returns (uint) { return a; } }
    contract C is I {
        using L for uint;
        struct S { uint a; }
        enum E { A, B }
        error Bad(uint code);
        event Ev(address indexed who);
        modifier only() { require(msg.sender == owner, "no"); _; }
        address owner;
        uint[] xs;
        constructor() { owner = msg.sender; }
        function f() external override {}
        function h(uint a) public only returns (uint b) {
            unchecked { b = a * 2; }
            for (uint i = 0; i < xs.length; i++) { if (i > 3) break; else continue; }
            (bool ok, ) = payable(owner).call{value: 1 wei}("");
            require(ok);
            emit Ev(msg.sender);
            try this.f() {} catch {}
            do { a--; } while (a > 0);
            b = a > 1 ? a : 1;
            assembly { let z := 1 }
            revert Bad(1);
        }
        receive() external payable {}
    }
    """
    ast = parse(src)
    assert ast.clean, ast.opaque_count
    assert len(ast.contracts) == 3
    assert not is_single_contract(ast)
    kinds = {n.kind for n in ast.root.walk()}
    assert {"CallOptions", "Unchecked", "Assembly", "Try", "DoWhile", "Conditional", "Emit", "Using"} <= kinds


def test_unbalanced_braces_raise():
    with pytest.raises(ParseError):
        parse("contract A { function f() public {")


def test_recovery_marks_opaque_but_keeps_going():
    src = "contract A { function f() public { x = ; } function g() public { y = 1; } }"
    ast = parse(src)
    assert not ast.clean
    assert [f.name for f in ast.functions()] == ["f", "g"]


def test_spans_are_consistent():
    ast = parse(ETHER_STORE)
    for node in ast.root.walk():
        assert 0 <= node.start <= node.end <= len(ETHER_STORE)
        for child in node.children:
            assert node.start <= child.start and child.end <= node.end


def test_subtrees_ignore_identifier_names():
    a = parse("contract A { function f(uint x) public { x = x + 1; } }")
    b = parse("contract B { function g(uint y) public { y = y + 1; } }")
    assert subtrees(a) == subtrees(b)
    assert all(depth_ok for depth_ok in (len(k) > 0 for k in subtrees(a)))


def test_def_use_edges_rename_invariant():
    a = parse("contract A { function f(uint x) public { uint y = x; y = y + x; } }")
    b = parse("contract B { function g(uint p) public { uint q = p; q = q + p; } }")
    ea, eb = def_use_edges(a), def_use_edges(b)
    assert ea == eb
    assert sum(ea.values()) == 3


def test_def_use_edges_empty_without_flow():
    assert def_use_edges(parse("contract A { function f() public {} }")) == {}


def test_toy_corpus_parses():
    for c in make_toy_corpus(20, 3):
        ast = parse(c.code)
        assert ast.clean and is_single_contract(ast)
