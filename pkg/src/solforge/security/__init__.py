"""Compile checks, vulnerability detectors and the security summary metrics."""

from .compile import EXTERNAL_SOLC, INTERNAL_PARSER, CompileResult, SolcConfig, compile_check, internal_compile_check
from .detectors import CLASSES, FindingList, VulnFinding, detect, low_level_call
from .labels import label_corpus, label_from_findings
from .slither import detector_map, findings_from_report, slither_adapter
from .summary import SecuritySummary, security_metrics

__all__ = [
    "CLASSES",
    "EXTERNAL_SOLC",
    "INTERNAL_PARSER",
    "CompileResult",
    "FindingList",
    "SecuritySummary",
    "SolcConfig",
    "VulnFinding",
    "compile_check",
    "detect",
    "detector_map",
    "findings_from_report",
    "internal_compile_check",
    "label_corpus",
    "label_from_findings",
    "low_level_call",
    "security_metrics",
    "slither_adapter",
]
