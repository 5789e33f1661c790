"""Compile check through an external ``solc`` or, failing that, a clean parse."""

from __future__ import annotations

import logging
import os
import re
import subprocess
import tempfile
from dataclasses import dataclass, field

from ..errors import LexError, ParseError, ToolSpawnError
from ..frontend.lexer import tokenize
from ..frontend.parser import parse
from .versions import parse_version, satisfies

log = logging.getLogger(__name__)

EXTERNAL_SOLC = "external-solc"
INTERNAL_PARSER = "internal-parser"

_PRAGMA = re.compile(r"pragma\s+solidity\s+([^;]+);")
_ERROR_LINE = re.compile(r"\b\w*Error\b")


@dataclass(frozen=True)
class CompileResult:
    compiled: bool
    tool: str
    diagnostics: tuple[str, ...] = ()

    @property
    def approximate(self) -> bool:
        return self.tool == INTERNAL_PARSER

    def to_dict(self) -> dict:
        return {"compiled": self.compiled, "tool": self.tool, "diagnostics": list(self.diagnostics)}


@dataclass
class SolcConfig:
    """Where to find compilers.

    ``versions`` maps version strings to binaries and is searched in
    ascending version order for the first one the pragma admits; ``path`` is
    the binary used when there is no pragma or no versioned list.
    """

    path: str | None = None
    versions: dict[str, str] = field(default_factory=dict)
    timeout: float = 60.0

    def select(self, source: str) -> str | None:
        m = _PRAGMA.search(source)
        if self.versions:
            if m is None:
                return self.path or self.versions[max(self.versions, key=parse_version)]
            for version in sorted(self.versions, key=parse_version):
                if satisfies(version, m.group(1)):
                    return self.versions[version]
            return None
        return self.path


def internal_compile_check(source: str) -> CompileResult:
    """A source compiles here when it lexes, parses without recovery and declares a contract."""
    try:
        ast = parse(tokenize(source))
    except (LexError, ParseError) as exc:
        return CompileResult(False, INTERNAL_PARSER, (str(exc),))
    if not ast.clean:
        return CompileResult(False, INTERNAL_PARSER, (f"{ast.opaque_count} unparseable region(s)",))
    if not ast.contracts:
        return CompileResult(False, INTERNAL_PARSER, ("no contract, library or interface declared",))
    return CompileResult(True, INTERNAL_PARSER)


def run_solc(binary: str, source: str, timeout: float = 60.0) -> CompileResult:
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "Input.sol")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(source)
        try:
            proc = subprocess.run([binary, path], capture_output=True, text=True, timeout=timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ToolSpawnError(f"could not run {binary}: {exc}") from exc
    if proc.returncode < 0:
        raise ToolSpawnError(f"{binary} killed by signal {-proc.returncode}")
    diagnostics = tuple(line for line in proc.stderr.splitlines() if line.strip())
    errors = [line for line in diagnostics if _ERROR_LINE.search(line)]
    return CompileResult(proc.returncode == 0 and not errors, EXTERNAL_SOLC, diagnostics)


def compile_check(source: str, solc: SolcConfig | None = None) -> CompileResult:
    """External compiler verdict when one matches the pragma, else the internal one."""
    binary = solc.select(source) if solc is not None else None
    if binary is None:
        return internal_compile_check(source)
    return run_solc(binary, source, solc.timeout)
