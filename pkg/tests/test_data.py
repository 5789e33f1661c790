import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from solforge.data import (
    CI,
    PSM,
    SPM,
    TI,
    TI_PROMPT,
    VD,
    VD_PROMPT,
    TrainingRecord,
    build_ci_dataset,
    build_ti_dataset,
    build_vd_dataset,
    extract_instruction,
    filter_single_contract,
    infill_examples,
    instruction_examples,
    load_corpus,
    render_infill,
    split_811,
    split_five_segments,
    tag_block,
    ti_input,
)
from solforge.errors import MissingInstruction, SentinelInSource, TooFew, TooShort
from solforge.frontend import ContractSource, tokenize
from solforge.specials import MID, PRE, SUF
from solforge.toy import make_toy_corpus, write_toy_corpus


def _sources(n=30, seed=0):
    return [ContractSource(c.code, c.source_id, c.label) for c in make_toy_corpus(n, seed)]


def test_tag_blocks_are_exact():
    assert tag_block("security") == "[Tag]<security>[/Tag]"
    assert tag_block("vulnerable") == "[Tag]<vulnerable>[/Tag]"
    with pytest.raises(ValueError):
        tag_block("maybe")


@settings(max_examples=200, deadline=None)
@given(st.integers(10, 400), st.integers(0, 2**32))
def test_five_segment_bounds(n, seed):
    j, k = split_five_segments(range(n), seed)
    s = n // 5
    assert s <= j < 2 * s
    assert 3 * s <= k < 4 * s


def test_five_segment_too_short():
    with pytest.raises(TooShort):
        split_five_segments(range(9), 0)


def test_j_and_k_cover_their_ranges():
    rng = np.random.default_rng(0)
    js, ks = set(), set()
    for _ in range(2000):
        j, k = split_five_segments(range(50), rng)
        js.add(j)
        ks.add(k)
    assert js == set(range(10, 20)) and ks == set(range(30, 40))


def test_infill_round_trip_and_rendering():
    for src in _sources(10):
        if src.label != "security":
            continue
        for ex in infill_examples(src, seed=3):
            assert ex.pre_text + ex.mid_text + ex.suf_text == ex.text
            assert [t.text for t in ex.pre + ex.mid + ex.suf] == tokenize(ex.text).lexemes
            inp, tgt = render_infill(ex)
            assert tgt == ex.mid_text
            if ex.mode == PSM:
                assert inp == f"{PRE}{ex.pre_text}{SUF}{ex.suf_text}{MID}"
            else:
                assert inp == f"{PRE}{SUF}{ex.suf_text}{MID}{ex.pre_text}"


def test_psm_fraction_chi_square():
    src = _sources(1)[0]
    counts = {PSM: 0, SPM: 0}
    for seed in range(2000):
        for ex in infill_examples(src, seed):
            counts[ex.mode] += 1
    total = sum(counts.values())
    assert chisquare([counts[PSM], counts[SPM]], [total / 2, total / 2]).pvalue > 0.001


def test_sentinel_in_source_rejected():
    bad = ContractSource("contract A { string s = '<MID>'; uint a; uint b; }", "bad", "security")
    with pytest.raises(SentinelInSource):
        infill_examples(bad, 0)
    # builders skip it instead of failing the whole dataset
    assert build_ci_dataset([bad], 0) == []


def test_ci_dataset_shape_and_determinism():
    secure = [s for s in _sources(40) if s.label == "security"]
    a = build_ci_dataset(secure, 5)
    b = build_ci_dataset(secure, 5)
    assert len(a) == 5 * len(secure)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    assert all(r.stage == CI and r.input_text.startswith(PRE) for r in a)
    assert [r.to_dict() for r in build_ci_dataset(secure, 6)] != [r.to_dict() for r in a]


def test_ci_rejects_vulnerable_sources():
    vuln = [s for s in _sources(20) if s.label == "vulnerable"][:1]
    with pytest.raises(ValueError):
        build_ci_dataset(vuln, 0)


def test_vd_records_format():
    records = build_vd_dataset(_sources(20))
    assert len(records) == 20
    for r in records:
        assert r.stage == VD
        assert r.input_text.endswith("\n" + VD_PROMPT)
        assert r.target_text in (tag_block("security"), tag_block("vulnerable"))
        assert r.target_text == tag_block(r.tag)
        assert "///" not in r.input_text


def test_ti_records_format():
    records = build_ti_dataset(instruction_examples(_sources(20)))
    assert len(records) == 20
    for r in records:
        assert r.stage == TI
        assert r.input_text.endswith(f"\n{TI_PROMPT}\n{tag_block(r.tag)}")
        assert r.input_text == ti_input(r.input_text.split("\n")[0], r.tag)
        assert r.input_text.startswith("Write a ")
        assert "@notice" not in r.target_text and "contract " in r.target_text


def test_ti_missing_instruction():
    with pytest.raises(MissingInstruction):
        build_ti_dataset([("  ", "contract A {}", "security", "a")])


def test_record_validation():
    with pytest.raises(ValueError):
        TrainingRecord(VD, "x", "security", "security", "a")
    with pytest.raises(ValueError):
        TrainingRecord(TI, "x", "code", "security", "a")
    with pytest.raises(ValueError):
        TrainingRecord(CI, "x", "y", "security", "a")


@pytest.mark.parametrize("n", [10, 11, 19, 20, 99, 100, 101, 1234])
def test_split_sizes(n):
    records = [TrainingRecord(CI, f"i{i}", "t", "none", str(i)) for i in range(n)]
    split = split_811(records, 1)
    m = n // 10
    assert split.sizes() == (n - 2 * m, m, m)
    ids = [r.source_id for part in (split.train, split.valid, split.test) for r in part]
    assert sorted(ids) == sorted(r.source_id for r in records)


def test_split_too_few():
    with pytest.raises(TooFew):
        split_811([TrainingRecord(CI, "i", "t", "none", "x")] * 9, 0)


def test_extract_instruction_variants():
    src = "// SPDX-License-Identifier: MIT\npragma solidity ^0.8.0;\n\n/// @title Vault\n/// @notice Keeps ether.\ncontract V {}"
    assert extract_instruction(src) == "Vault Keeps ether."
    block = "/**\n * @notice Sends tokens\n * to people.\n */\nabstract contract T {}"
    assert extract_instruction(block) == "Sends tokens to people."
    assert extract_instruction("// far away\n\nuint constant X = 1;\ncontract A {}") == ""
    assert extract_instruction("contract A {}") == ""


def test_load_and_filter(tmp_path):
    (tmp_path / "one.sol").write_text("contract A { uint x; }")
    (tmp_path / "two.sol").write_text("contract A {} contract B {}")
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "broken.sol").write_text("contract A { function f() {")
    labels = tmp_path / "labels.jsonl"
    labels.write_text(json.dumps({"id": "one", "label": "security"}) + "\n")
    corpus = load_corpus(tmp_path, labels)
    assert [c.origin for c in corpus] == ["one", "sub/broken", "two"]
    assert corpus[0].label == "security" and corpus[2].label is None
    kept, stats = filter_single_contract(corpus)
    assert [c.origin for c in kept] == ["one"]
    assert stats.to_dict() == {"total": 3, "kept": 1, "dropped": {"multi-contract": 1, "unparseable": 1}}


def test_toy_files_round_trip(tmp_path):
    contracts = write_toy_corpus(tmp_path, 12, seed=4, n_tasks=3)
    corpus = load_corpus(tmp_path / "corpus", tmp_path / "labels.jsonl")
    assert [c.text for c in corpus] == [c.code for c in contracts]
    assert all(c.label in ("security", "vulnerable") for c in corpus)
    tasks = [json.loads(line) for line in (tmp_path / "tasks.jsonl").read_text().splitlines()]
    assert len(tasks) == 3 and all("@notice" not in t["reference_code"] for t in tasks)
