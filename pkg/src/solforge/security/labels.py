"""Corpus labelling from analyser findings."""

from __future__ import annotations

import logging
from typing import Callable, Iterable

from ..errors import ToolSpawnError
from ..frontend.lexer import ContractSource
from .detectors import FindingList, detect

log = logging.getLogger(__name__)


def label_from_findings(findings: FindingList) -> str:
    return "vulnerable" if len(findings) > 0 else "security"


def label_corpus(corpus: Iterable[ContractSource], analyzer: Callable[[str], FindingList] = detect) -> list[dict]:
    """``{"id", "label"}`` rows; sources the analyser cannot handle are left out."""
    rows = []
    for src in corpus:
        try:
            findings = analyzer(src.text)
        except ToolSpawnError as exc:
            log.warning("analysis of %s failed, excluded: %s", src.origin, exc)
            continue
        if findings.analysis_failed:
            log.warning("analysis of %s failed, excluded: %s", src.origin, findings.reason)
            continue
        rows.append({"id": src.origin, "label": label_from_findings(findings)})
    return rows
