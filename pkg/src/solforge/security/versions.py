"""Solidity pragma version ranges (``^``, ``~``, comparisons, ``||``)."""

from __future__ import annotations

import re

_COMPARATOR = re.compile(r"(\^|~|>=|<=|>|<|=)?\s*v?(\d+)(?:\.(\d+|[*xX]))?(?:\.(\d+|[*xX]))?")

Version = tuple[int, int, int]


def parse_version(text: str) -> Version:
    parts = [int(p) for p in text.strip().lstrip("v").split(".")]
    parts += [0] * (3 - len(parts))
    return tuple(parts[:3])  # type: ignore[return-value]


def _bounds(op: str, nums: list[str | None]) -> list[tuple[str, Version]]:
    """Expand one comparator into elementary (op, version) constraints."""
    given = [n for n in nums if n is not None and n not in "*xX"]
    v = tuple(int(x) for x in given) + (0,) * (3 - len(given))
    major, minor, patch = v
    if op == "^":
        if major > 0:
            upper = (major + 1, 0, 0)
        elif minor > 0 or len(given) < 3:
            upper = (0, minor + 1, 0) if len(given) >= 2 else (1, 0, 0)
        else:
            upper = (0, 0, patch + 1)
        return [(">=", v), ("<", upper)]
    if op == "~":
        upper = (major, minor + 1, 0) if len(given) >= 2 else (major + 1, 0, 0)
        return [(">=", v), ("<", upper)]
    if op in ("", "=") and len(given) < 3:
        # partial version or wildcard behaves like a range
        upper = (major + 1, 0, 0) if len(given) == 1 else (major, minor + 1, 0)
        return [(">=", v), ("<", upper)]
    return [(op or "=", v)]


def _check(op: str, have: Version, want: Version) -> bool:
    return {
        "=": have == want,
        ">=": have >= want,
        "<=": have <= want,
        ">": have > want,
        "<": have < want,
    }[op]


def satisfies(version: str | Version, constraint: str) -> bool:
    """True when ``version`` lies in the pragma range ``constraint``."""
    have = parse_version(version) if isinstance(version, str) else version
    constraint = constraint.strip()
    if constraint.startswith("solidity"):
        constraint = constraint[len("solidity") :]
    for alternative in constraint.split("||"):
        matches = list(_COMPARATOR.finditer(alternative))
        if not matches:
            continue
        if all(
            _check(op, have, want)
            for m in matches
            for op, want in _bounds(m.group(1) or "", [m.group(2), m.group(3), m.group(4)])
        ):
            return True
    return False


def lowest_bound(constraint: str) -> Version | None:
    """Smallest version named by the constraint's lower bounds, if any."""
    found = []
    for m in _COMPARATOR.finditer(constraint):
        if (m.group(1) or "") in ("", "=", "^", "~", ">=", ">"):
            found.append(tuple(int(x) if x and x not in "*xX" else 0 for x in (m.group(2), m.group(3), m.group(4))))
    return min(found) if found else None
