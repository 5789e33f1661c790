import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solforge.errors import EmptyReference, EmptySamples
from solforge.frontend.lexer import KEYWORDS
from solforge.metrics import MetricConfig, SampleScores, aggregate, ast_match, bleu, code_tokens, codebleu, dataflow_match, weighted_ngram_match
from solforge.toy import make_toy_corpus

from oracles import brute_bleu

tokens = st.lists(st.sampled_from(list("abcd")), max_size=9)


def test_bleu_hand_cases():
    assert bleu(list("ababc"), list("ababcde")) == pytest.approx(math.exp(-0.4), abs=1e-12)
    assert bleu(["x", "y"], ["x", "y"]) == 1.0
    assert bleu([], ["a"]) == 0.0
    with pytest.raises(EmptyReference):
        bleu(["a"], [])


def test_bleu_smoothing_keeps_score_positive():
    score = bleu(list("abcd"), list("dcba"))
    # unigrams all match; orders 2..4 have no match and take eps over their totals
    expected = math.exp((math.log(1e-9 / 3) + math.log(1e-9 / 2) + math.log(1e-9 / 1)) / 4)
    assert score == pytest.approx(expected, rel=1e-12)
    assert score > 0


@settings(max_examples=300, deadline=None)
@given(tokens, tokens.filter(bool))
def test_bleu_matches_brute_force(cand, ref):
    assert bleu(cand, ref) == pytest.approx(brute_bleu(cand, ref), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(tokens, tokens.filter(bool))
def test_bleu_bounds(cand, ref):
    assert 0.0 <= bleu(cand, ref) <= 1.0 + 1e-12


@settings(max_examples=150, deadline=None)
@given(st.lists(st.sampled_from(["uint", "x", "=", "return", ";", "y"]), max_size=10), st.lists(st.sampled_from(["uint", "x", "=", "return", ";"]), min_size=1, max_size=10))
def test_weighted_ngram_matches_brute_force(cand, ref):
    w = lambda g: 4.0 if g[0] in KEYWORDS else 1.0
    assert weighted_ngram_match(cand, ref) == pytest.approx(brute_bleu(cand, ref, weight=w), abs=1e-12)


def test_keyword_weight_changes_score():
    cand = ["return", "x", ";", "y"]
    ref = ["return", "x", ";", "z"]
    cfg = MetricConfig(max_n=3)
    plain = bleu(cand, ref, cfg)
    weighted = weighted_ngram_match(cand, ref, cfg)
    assert weighted > plain
    assert weighted_ngram_match(cand, ref, MetricConfig(max_n=3, keyword_weight=1.0)) == pytest.approx(plain)


def test_max_n_config():
    cfg = MetricConfig(max_n=1)
    assert bleu(list("abcd"), list("dcba"), cfg) == 1.0


@pytest.mark.parametrize(
    "kwargs",
    [dict(codebleu_weights=(0.5, 0.5, 0.5, 0.5)), dict(codebleu_weights=(1, 0, 0)), dict(max_n=0), dict(keyword_weight=0), dict(smoothing_epsilon=-1)],
)
def test_metric_config_validation(kwargs):
    with pytest.raises(ValueError):
        MetricConfig(**kwargs)


REF = """pragma solidity ^0.8.0;
contract Bank {
    mapping(address => uint256) public balances;
    function withdraw(uint256 amount) external {
        require(balances[msg.sender] >= amount);
        balances[msg.sender] -= amount;
        payable(msg.sender).transfer(amount);
    }
}
"""


def test_codebleu_identity():
    s = codebleu(REF, REF)
    assert s.components == (1.0, 1.0, 1.0, 1.0)
    assert s.cb == pytest.approx(1.0) and not s.parse_failed


def test_codebleu_ignores_comments():
    commented = REF.replace("contract Bank {", "/// @notice a bank\ncontract Bank { // here")
    assert codebleu(commented, REF).cb == pytest.approx(1.0)


def test_syntax_and_dataflow_are_rename_invariant():
    renamed = REF.replace("amount", "value").replace("balances", "funds").replace("Bank", "Vault")
    s = codebleu(renamed, REF)
    assert s.ast_match == 1.0
    assert s.dataflow_match == 1.0
    assert s.ngram < 1.0


def test_unparseable_candidate_scores_zero_structure():
    s = codebleu("contract Broken { function f() public {", REF)
    assert s.parse_failed
    assert s.ast_match == 0.0 and s.dataflow_match == 0.0
    assert s.ngram > 0


def test_unterminated_string_candidate_still_scored():
    s = codebleu('contract A { string s = "oops; }', REF)
    assert s.parse_failed or s.ast_match <= 1.0
    assert 0 <= s.cb <= 1


def test_dataflow_empty_conventions():
    empty = "contract A { function f() public {} }"
    assert dataflow_match(empty, empty) == 1.0
    assert dataflow_match(empty, REF) == 0.0
    assert dataflow_match(REF, empty) == 0.0


def test_ast_match_empty_candidate():
    assert ast_match("", REF) == 0.0


def test_codebleu_empty_reference():
    with pytest.raises(EmptyReference):
        codebleu("contract A {}", "// nothing")


def test_codebleu_linearity_random_pairs():
    rng = random.Random(1)
    corpus = [c.code for c in make_toy_corpus(30, 2)]
    cfg = MetricConfig(codebleu_weights=(0.1, 0.2, 0.3, 0.4))
    for _ in range(40):
        a, b = rng.choice(corpus), rng.choice(corpus)
        s = codebleu(a, b, cfg)
        assert s.cb == pytest.approx(sum(w * c for w, c in zip(cfg.codebleu_weights, s.components)), abs=1e-12)


def test_code_tokens():
    assert code_tokens("uint x = 1; // c") == ["uint", "x", "=", "1", ";"]


def test_aggregate():
    samples = [SampleScores(b, c, b, 0, 0, 0) for b, c in ((0.2, 0.4), (0.6, 0.1), (0.1, 0.3))]
    avg_b, best_b, avg_c, best_c = aggregate(samples, "t")
    assert (avg_b, best_b, avg_c, best_c) == pytest.approx((0.3, 0.6, 0.8 / 3, 0.4))
    with pytest.raises(EmptySamples):
        aggregate([], "t")
