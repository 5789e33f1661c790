"""Adapter for an external Slither binary and its JSON report."""

from __future__ import annotations

import json
import logging
import os
import subprocess
import tempfile
from functools import lru_cache
from importlib import resources

from ..errors import MappingGap, ToolSpawnError
from .detectors import HEURISTIC, HIGH, FindingList, VulnFinding

log = logging.getLogger(__name__)


@lru_cache(maxsize=1)
def detector_map() -> dict[str, str]:
    """The shipped ``detector_map.json``: tool detector id to vulnerability class."""
    text = resources.files(__package__).joinpath("detector_map.json").read_text(encoding="utf-8")
    return json.loads(text)


def findings_from_report(report: dict, mapping: dict[str, str] | None = None) -> tuple[FindingList, list[MappingGap]]:
    """Translate a Slither JSON report; unmapped detector ids become OTHER."""
    mapping = detector_map() if mapping is None else mapping
    if not report.get("success", False):
        raise ToolSpawnError(f"slither reported failure: {report.get('error')}")
    found, gaps = {}, []
    for item in (report.get("results") or {}).get("detectors", []):
        check = item.get("check", "")
        cls = mapping.get(check)
        if cls is None:
            gap = MappingGap(check)
            log.warning("%s", gap)
            gaps.append(gap)
            cls = "OTHER"
        span = (0, 0)
        for element in item.get("elements", []):
            sm = element.get("source_mapping") or {}
            if "start" in sm and "length" in sm:
                span = (int(sm["start"]), int(sm["start"]) + int(sm["length"]))
                break
        confidence = HEURISTIC if cls == "FR" or item.get("confidence") == "Low" else HIGH
        found.setdefault((cls, span, check), VulnFinding(cls, span, f"slither:{check}", confidence))
    return FindingList(sorted(found.values(), key=lambda f: (f.span, f.cls, f.detector))), gaps


def slither_adapter(source: str, slither_path: str, solc_path: str | None = None, timeout: float = 300.0) -> FindingList:
    """Run the external analyser on one source and map its findings."""
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "Input.sol")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(source)
        cmd = [slither_path, path, "--json", "-"]
        if solc_path:
            cmd += ["--solc", solc_path]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout, cwd=tmp)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ToolSpawnError(f"could not run {slither_path}: {exc}") from exc
    # the tool exits non-zero whenever it reports findings, so only the JSON decides
    try:
        report = json.loads(proc.stdout)
    except json.JSONDecodeError as exc:
        raise ToolSpawnError(f"{slither_path} produced no JSON report (exit {proc.returncode}): {proc.stderr.strip()[:200]}") from exc
    findings, _ = findings_from_report(report)
    return findings
