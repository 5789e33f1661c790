import json
import random
import stat
import sys

import pytest

from solforge.errors import EmptyResults, ToolSpawnError
from solforge.frontend import ContractSource
from solforge.security import (
    EXTERNAL_SOLC,
    INTERNAL_PARSER,
    CompileResult,
    FindingList,
    SolcConfig,
    VulnFinding,
    compile_check,
    detect,
    detector_map,
    findings_from_report,
    internal_compile_check,
    label_corpus,
    security_metrics,
    slither_adapter,
)
from solforge.security.versions import lowest_bound, parse_version, satisfies

from conftest import ETHER_STORE
from detector_fixtures import FIXTURES, GATED


def _script(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(f"#!{sys.executable}\nimport sys, json\n{body}\n")
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


# -- detectors ----------------------------------------------------------------

@pytest.mark.parametrize("name,expected,source", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_detector_fixture(name, expected, source):
    found = detect(source)
    assert not found.analysis_failed
    assert found.classes & GATED == expected


def test_ether_store_flagged_reentrancy():
    re_findings = [f for f in detect(ETHER_STORE) if f.cls == "RE"]
    assert len(re_findings) == 1
    start, end = re_findings[0].span
    assert ETHER_STORE.encode()[start:end].startswith(b"msg.sender.call.value")


def test_spans_are_bytes_within_source():
    src = "// größe\n" + FIXTURES[1][2]
    raw = src.encode("utf-8")
    for f in detect(src):
        assert 0 <= f.span[0] < f.span[1] <= len(raw)
        assert raw[f.span[0] : f.span[1]].decode("utf-8")
    re_span = next(f.span for f in detect(src) if f.cls == "RE")
    assert raw[re_span[0] : re_span[1]].startswith(b"msg.sender.call{value")


def test_front_running_heuristic():
    src = """pragma solidity ^0.8.0;
contract Shop {
    uint256 public price = 1 ether;
    function setPrice(uint256 p) external { price = p; }
    function buy() external payable { require(msg.value >= price); }
}
"""
    fr = [f for f in detect(src) if f.cls == "FR"]
    assert len(fr) == 1 and fr[0].confidence == "heuristic"


def test_unparseable_source_flags_failure():
    found = detect("contract A { function f() public {")
    assert found == [] and found.analysis_failed and found.reason


def test_empty_source_has_no_findings():
    assert detect("") == [] and not detect("").analysis_failed


def test_finding_validation():
    with pytest.raises(ValueError):
        VulnFinding("XSS", (0, 1), "x")
    assert VulnFinding("RE", (1, 2), "d").to_dict() == {"class": "RE", "span": [1, 2], "detector": "d", "confidence": "high"}


def test_detection_is_deterministic():
    for _, _, src in FIXTURES[:10]:
        assert detect(src) == detect(src)


# -- versions -------------------------------------------------------------------

@pytest.mark.parametrize(
    "version,constraint,ok",
    [
        ("0.8.19", "^0.8.0", True),
        ("0.9.0", "^0.8.0", False),
        ("0.4.26", "^0.4.24", True),
        ("0.4.23", "^0.4.24", False),
        ("0.5.17", ">=0.5.0 <0.6.0", True),
        ("0.6.0", ">=0.5.0 <0.6.0", False),
        ("0.6.12", "0.6.12", True),
        ("0.7.6", "~0.7.0", True),
        ("0.8.1", "~0.7.0", False),
        ("0.7.1", "^0.6.0 || ^0.7.0", True),
    ],
)
def test_satisfies(version, constraint, ok):
    assert satisfies(version, constraint) is ok


def test_lowest_bound():
    assert lowest_bound("^0.4.24") == (0, 4, 24)
    assert lowest_bound(">=0.5.0 <0.6.0") == (0, 5, 0)
    assert (0, 7, 0) <= lowest_bound(">0.7.0") < (0, 8, 0)
    assert parse_version("0.8") == (0, 8, 0)


# -- compile checks -------------------------------------------------------------

def test_internal_compile_check():
    assert internal_compile_check(ETHER_STORE) == CompileResult(True, INTERNAL_PARSER)
    assert not internal_compile_check("contract A { function f() public { x = ; } }").compiled
    assert not internal_compile_check("pragma solidity ^0.8.0;").compiled
    assert not internal_compile_check("contract A {").compiled
    assert internal_compile_check(ETHER_STORE).approximate


def test_external_solc_verdicts(tmp_path):
    ok = _script(tmp_path, "solc_ok", "sys.exit(0)")
    warn = _script(tmp_path, "solc_warn", "sys.stderr.write('Warning: unused variable\\n'); sys.exit(0)")
    err = _script(tmp_path, "solc_err", "sys.stderr.write('ParserError: Expected ;\\n'); sys.exit(1)")
    assert compile_check(ETHER_STORE, SolcConfig(ok)) == CompileResult(True, EXTERNAL_SOLC)
    warned = compile_check(ETHER_STORE, SolcConfig(warn))
    assert warned.compiled and warned.diagnostics == ("Warning: unused variable",)
    assert not compile_check(ETHER_STORE, SolcConfig(err)).compiled
    assert not compile_check(ETHER_STORE, SolcConfig(ok)).approximate


def test_external_solc_failures(tmp_path):
    with pytest.raises(ToolSpawnError):
        compile_check(ETHER_STORE, SolcConfig(str(tmp_path / "missing")))
    hang = _script(tmp_path, "solc_hang", "import time; time.sleep(5)")
    with pytest.raises(ToolSpawnError):
        compile_check(ETHER_STORE, SolcConfig(hang, timeout=0.5))
    killed = _script(tmp_path, "solc_killed", "import os, signal; os.kill(os.getpid(), signal.SIGKILL)")
    with pytest.raises(ToolSpawnError):
        compile_check(ETHER_STORE, SolcConfig(killed))


def test_version_selection(tmp_path):
    cfg = SolcConfig(None, {"0.4.26": "solc-0.4", "0.8.19": "solc-0.8", "0.8.4": "solc-0.8.4"})
    assert cfg.select(ETHER_STORE) == "solc-0.4"
    assert cfg.select("pragma solidity ^0.8.0;\ncontract A {}") == "solc-0.8.4"
    assert cfg.select("pragma solidity ^0.6.0;\ncontract A {}") is None
    assert cfg.select("contract A {}") == "solc-0.8"
    # no compiler admits the pragma: fall back to the internal check
    assert compile_check("pragma solidity ^0.6.0;\ncontract A {}", cfg).tool == INTERNAL_PARSER


# -- external analyser ----------------------------------------------------------

REPORT = {
    "success": True,
    "error": None,
    "results": {
        "detectors": [
            {"check": "reentrancy-eth", "confidence": "Medium", "elements": [{"source_mapping": {"start": 10, "length": 5}}]},
            {"check": "timestamp", "confidence": "Medium", "elements": [{"source_mapping": {"start": 30, "length": 2}}]},
            {"check": "naming-convention", "confidence": "High", "elements": []},
        ]
    },
}


def test_report_mapping():
    findings, gaps = findings_from_report(REPORT)
    assert [(f.cls, f.span) for f in findings] == [("OTHER", (0, 0)), ("RE", (10, 15)), ("TM", (30, 32))]
    assert [g.detector_id for g in gaps] == ["naming-convention"]


def test_report_failure():
    with pytest.raises(ToolSpawnError):
        findings_from_report({"success": False, "error": "compile failed", "results": {}})


def test_detector_map_covers_gated_classes():
    classes = set(detector_map().values())
    assert GATED <= classes
    assert "OTHER" not in classes


def test_slither_adapter(tmp_path):
    good = _script(tmp_path, "slither", f"print(json.dumps({REPORT!r})); sys.exit(255)")
    findings = slither_adapter(ETHER_STORE, good)
    assert {f.cls for f in findings} == {"RE", "TM", "OTHER"}
    garbage = _script(tmp_path, "slither_bad", "print('Traceback'); sys.exit(1)")
    with pytest.raises(ToolSpawnError):
        slither_adapter(ETHER_STORE, garbage)
    with pytest.raises(ToolSpawnError):
        slither_adapter(ETHER_STORE, str(tmp_path / "absent"))


# -- summary metrics ------------------------------------------------------------

def _results(spec):
    return [(CompileResult(c, INTERNAL_PARSER), [object()] * f) for c, f in spec]


def test_summary_hand_case():
    spec = [(True, 1)] * 54 + [(True, 0)] * 124 + [(False, 0)] * 27
    s = security_metrics(_results(spec)).to_dict()
    assert (s["com_pass"], s["vul_rate"], s["safe_aval"]) == (86.83, 30.34, 60.49)


def test_findings_on_failed_compiles_do_not_count():
    s = security_metrics(_results([(False, 3), (True, 0)]))
    assert s.vul_rate == 0.0 and s.safe_aval == 50.0


def test_nothing_compiled():
    s = security_metrics(_results([(False, 0)] * 4))
    assert (s.com_pass, s.vul_rate, s.safe_aval) == (0.0, 0.0, 0.0)


def test_empty_results():
    with pytest.raises(EmptyResults):
        security_metrics([])


def test_summary_random_invariants():
    rng = random.Random(0)
    for _ in range(200):
        spec = [(rng.random() < 0.7, rng.randint(0, 2)) for _ in range(rng.randint(1, 40))]
        s = security_metrics(_results(spec))
        assert s.safe_aval <= s.com_pass + 1e-12
        assert 0 <= s.vul_rate <= 100


# -- labelling ------------------------------------------------------------------

def test_label_corpus():
    corpus = [
        ContractSource(ETHER_STORE, "fig", None),
        ContractSource(FIXTURES[5][2], "safe", None),
        ContractSource("contract A { function f() {", "broken", None),
    ]
    assert label_corpus(corpus) == [{"id": "fig", "label": "vulnerable"}, {"id": "safe", "label": "security"}]


def test_label_corpus_tool_failure():
    def failing(_):
        raise ToolSpawnError("boom")

    assert label_corpus([ContractSource("contract A {}", "a", None)], failing) == []
    assert label_corpus([ContractSource("contract A {}", "a", None)], lambda s: FindingList()) == [{"id": "a", "label": "security"}]
