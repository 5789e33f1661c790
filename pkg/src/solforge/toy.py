"""Synthetic vault contracts for desk-scale runs.

Every contract is a small ether vault. Vulnerable ones send ether before
zeroing the sender's balance (the classic reentrancy ordering); secure ones
zero the balance first. The vulnerable ordering starts with
:data:`VULNERABLE_MARKER`, so it can be located and scored directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frontend.lexer import strip_comments

PREFIXES = ["Ether", "Token", "Coin", "Gold", "Silver", "Simple", "Quick", "Prime", "Nova", "Lunar", "Solar", "Amber"]
SUFFIXES = ["Vault", "Bank", "Store", "Wallet", "Pool", "Safe", "Box", "Fund"]
ADJECTIVES = ["small", "simple", "minimal", "basic", "compact", "plain"]

VULNERABLE_MARKER = '(bool ok, ) = msg.sender.call{value: amount}("");'

_HEADER = "pragma solidity ^0.8.0;\n\n/// @notice {instruction}\ncontract {name} {{\n"
_STATE = "    mapping(address => uint256) public balances;\n"
_TOTAL_STATE = "    uint256 public totalDeposits;\n"
_EVENT = "    event Deposited(address indexed user, uint256 amount);\n"
_DEPOSIT = "\n    function deposit() external payable {{\n        balances[msg.sender] += msg.value;\n{extra}    }}\n"
_WITHDRAW_HEAD = (
    "\n    function withdraw() external {\n"
    "        uint256 amount = balances[msg.sender];\n"
    "        require(amount > 0);\n"
)
_SAFE_BODY = (
    "        balances[msg.sender] = 0;\n"
    '        (bool ok, ) = msg.sender.call{value: amount}("");\n'
    "        require(ok);\n"
    "    }\n"
)
_VULN_BODY = (
    '        (bool ok, ) = msg.sender.call{value: amount}("");\n'
    "        require(ok);\n"
    "        balances[msg.sender] = 0;\n"
    "    }\n"
)
_BALANCE_OF = (
    "\n    function balanceOf(address user) external view returns (uint256) {\n"
    "        return balances[user];\n"
    "    }\n"
)


@dataclass(frozen=True)
class ToyContract:
    source_id: str
    name: str
    instruction: str
    code: str
    label: str

    @property
    def withdraw_prefix(self) -> str:
        """Comment-free code up to the point where secure and vulnerable bodies diverge."""
        code = strip_comments(self.code)
        head_end = code.index(_WITHDRAW_HEAD) + len(_WITHDRAW_HEAD)
        return code[:head_end] + "        "


def _make_contract(rng: np.random.Generator, index: int, label: str, prefix: str) -> ToyContract:
    name = PREFIXES[rng.integers(len(PREFIXES))] + SUFFIXES[rng.integers(len(SUFFIXES))]
    with_total = bool(rng.integers(2))
    with_event = bool(rng.integers(2))
    with_view = bool(rng.integers(2))
    adjective = ADJECTIVES[rng.integers(len(ADJECTIVES))]

    clauses = []
    if with_total:
        clauses.append("tracks the total deposited")
    if with_event:
        clauses.append("emits an event on deposit")
    if with_view:
        clauses.append("exposes each balance")
    instruction = f"Write a {adjective} vault named {name} where users deposit and withdraw ether"
    if clauses:
        instruction += " and which " + " and ".join(clauses)
    instruction += "."

    extra = ""
    if with_total:
        extra += "        totalDeposits += msg.value;\n"
    if with_event:
        extra += "        emit Deposited(msg.sender, msg.value);\n"
    code = _HEADER.format(instruction=instruction, name=name) + _STATE
    if with_total:
        code += _TOTAL_STATE
    if with_event:
        code += _EVENT
    code += _DEPOSIT.format(extra=extra)
    code += _WITHDRAW_HEAD + (_VULN_BODY if label == "vulnerable" else _SAFE_BODY)
    if with_view:
        code += _BALANCE_OF
    code += "}\n"
    return ToyContract(f"{prefix}{index:04d}", name, instruction, code, label)


def make_toy_corpus(n: int = 200, seed: int = 0, vulnerable_fraction: float = 0.5, prefix: str = "toy") -> list[ToyContract]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        label = "vulnerable" if rng.random() < vulnerable_fraction else "security"
        out.append(_make_contract(rng, i, label, prefix))
    return out


def write_toy_corpus(directory: str | Path, n: int = 200, seed: int = 0, n_tasks: int = 10) -> list[ToyContract]:
    """Write ``*.sol`` files, ``labels.jsonl`` and a ``tasks.jsonl`` of secure references."""
    directory = Path(directory)
    corpus_dir = directory / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    contracts = make_toy_corpus(n, seed)
    with open(directory / "labels.jsonl", "w", encoding="utf-8", newline="\n") as labels:
        for c in contracts:
            (corpus_dir / f"{c.source_id}.sol").write_text(c.code, encoding="utf-8", newline="\n")
            labels.write(json.dumps({"id": c.source_id, "label": c.label}) + "\n")
    tasks = make_toy_corpus(n_tasks, seed + 1, vulnerable_fraction=0.0, prefix="task")
    with open(directory / "tasks.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for t in tasks:
            body = t.code.replace(f"/// @notice {t.instruction}\n", "")
            fh.write(json.dumps({"task_id": t.source_id, "instruction": t.instruction, "reference_code": body}) + "\n")
    return contracts
