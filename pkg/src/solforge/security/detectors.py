"""Pattern detectors for the eight DASP vulnerability classes.

Every detector works on the tolerant AST of a single source file. Spans are
UTF-8 byte ranges into the text that was analysed.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from ..errors import LexError, ParseError
from ..frontend.ast import ContractAst, Node
from ..frontend.lexer import tokenize
from ..frontend.parser import parse
from .versions import lowest_bound

log = logging.getLogger(__name__)

CLASSES = ("RE", "AC", "AR", "ULLC", "DoS", "BR", "FR", "TM", "OTHER")
HIGH, HEURISTIC = "high", "heuristic"

LOW_LEVEL = frozenset(["call", "delegatecall", "staticcall", "callcode", "send", "transfer"])
HASHES = frozenset(["keccak256", "sha256", "sha3", "ripemd160"])
BLOCK_ATTRS = frozenset(["timestamp", "difficulty", "prevrandao", "number", "coinbase", "gaslimit", "blockhash"])
SAFE_MATH = re.compile(r"SafeMath", re.I)
OWNER_LIKE = re.compile(r"owner|admin", re.I)
PRICE_LIKE = re.compile(r"price|fee|rate|cost|reward|bid", re.I)
REENTRANCY_GUARDS = frozenset(["nonReentrant", "noReentrancy", "lock", "mutex"])


@dataclass(frozen=True)
class VulnFinding:
    cls: str
    span: tuple[int, int]
    detector: str
    confidence: str = HIGH

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise ValueError(f"unknown vulnerability class {self.cls!r}")
        if self.confidence not in (HIGH, HEURISTIC):
            raise ValueError(f"unknown confidence {self.confidence!r}")

    def to_dict(self) -> dict:
        return {"class": self.cls, "span": list(self.span), "detector": self.detector, "confidence": self.confidence}


class FindingList(list):
    """A list of findings that also records whether analysis failed."""

    def __init__(self, items: Iterable[VulnFinding] = (), analysis_failed: bool = False, reason: str = ""):
        super().__init__(items)
        self.analysis_failed = analysis_failed
        self.reason = reason

    @property
    def classes(self) -> set[str]:
        return {f.cls for f in self}


# -- small AST helpers ------------------------------------------------------

def _root(expr: Node | None) -> Node | None:
    """The identifier at the base of ``a.b[c].d``."""
    while expr is not None and expr.kind in ("IndexAccess", "MemberAccess") and expr.children:
        expr = expr.children[0]
    return expr if expr is not None and expr.kind == "Identifier" else None


def _root_name(expr: Node | None) -> str | None:
    node = _root(expr)
    return node.name if node is not None else None


def _is_member(node: Node, base: str, member: str) -> bool:
    return (
        node.kind == "MemberAccess"
        and node.attrs.get("member") == member
        and bool(node.children)
        and node.children[0].kind == "Identifier"
        and node.children[0].name == base
    )


def _is_timestamp(node: Node) -> bool:
    return _is_member(node, "block", "timestamp") or (node.kind == "Identifier" and node.name == "now")


def _is_block_source(node: Node) -> bool:
    if node.kind == "Identifier" and node.name == "now":
        return True
    if node.kind == "MemberAccess" and node.attrs.get("member") in BLOCK_ATTRS:
        return bool(node.children) and node.children[0].kind == "Identifier" and node.children[0].name == "block"
    return _callee_name(node) == "blockhash"


def _callee_name(node: Node) -> str | None:
    if node.kind != "Call" or not node.children:
        return None
    callee = node.children[0]
    if callee.kind == "Identifier":
        return callee.name
    if callee.kind == "MemberAccess":
        return callee.attrs.get("member")
    return None


def _args(call: Node) -> list[Node]:
    return call.children[1:]


@dataclass(frozen=True)
class LowLevelCall:
    node: Node
    kind: str
    target: Node
    sends_value: bool
    value_args: tuple[Node, ...]


def low_level_call(node: Node) -> LowLevelCall | None:
    """Recognise ``x.call{value: v}(..)``, ``x.call.value(v)(..)``, ``x.send(v)`` and friends."""
    if node.kind != "Call" or not node.children:
        return None
    callee = node.children[0]
    value_args: list[Node] = []
    if callee.kind == "CallOptions":
        opts = callee.attrs.get("options", [])
        value_args += [v for k, v in zip(opts, callee.children[1:]) if k == "value"]
        callee = callee.children[0]
    # legacy chained options: x.call.value(v).gas(g)(...)
    while callee.kind == "Call" and callee.children and callee.children[0].kind == "MemberAccess" and callee.children[0].attrs.get("member") in ("value", "gas"):
        if callee.children[0].attrs["member"] == "value":
            value_args += _args(callee)
        callee = callee.children[0].children[0]
    if callee.kind != "MemberAccess" or callee.attrs.get("member") not in LOW_LEVEL or not callee.children:
        return None
    kind = callee.attrs["member"]
    if kind in ("send", "transfer"):
        if len(_args(node)) != 1:
            return None  # token transfer(to, amount), not an ether transfer
        value_args += _args(node)
    return LowLevelCall(node, kind, callee.children[0], bool(value_args), tuple(value_args))


def _guard_conditions(fn_body: Node) -> list[Node]:
    """Conditions that gate execution: require/assert arguments and branch or loop tests."""
    out = []
    for node in fn_body.walk():
        if node.kind == "Require" and len(node.children) > 1:
            out.append(node.children[1])
        elif node.kind == "Call" and _callee_name(node) == "assert" and node.children[0].kind == "Identifier" and len(node.children) > 1:
            out.append(node.children[1])
        elif node.kind in ("If", "While", "DoWhile", "For") and node.attrs.get("cond") is not None:
            out.append(node.attrs["cond"])
        elif node.kind == "Conditional":
            out.append(node.children[0])
    return sorted(out, key=lambda n: n.start)


def _identifiers(node: Node) -> Iterator[Node]:
    for n in node.walk():
        if n.kind == "Identifier":
            yield n


def _mentions_sender(node: Node) -> bool:
    return any(_is_member(n, "msg", "sender") or _is_member(n, "tx", "origin") for n in node.walk())


def _writes(body: Node) -> list[tuple[Node, str]]:
    """``(node, root variable)`` for every assignment, ``++``/``--`` and ``delete``."""
    out = []
    for node in body.walk():
        target = None
        if node.kind == "Assign":
            target = node.children[0]
        elif node.kind == "UnaryOp" and node.attrs.get("op") in ("++", "--", "delete"):
            target = node.children[0]
        elif node.kind == "Call" and node.children[0].kind == "MemberAccess" and node.children[0].attrs.get("member") in ("push", "pop"):
            target = node.children[0].children[0]
        if target is None:
            continue
        if target.kind == "Tuple":
            out += [(node, name) for t in target.children if (name := _root_name(t))]
        elif (name := _root_name(target)) is not None:
            out.append((node, name))
    return out


class _Scope:
    """Names visible inside one function: state variables, parameters and locals."""

    def __init__(self, state: dict[str, Node], fn: Node):
        self.state = state
        self.locals: dict[str, Node] = {}
        for child in fn.children:
            if child.kind == "Parameter" and child.name:
                self.locals[child.name] = child.children[0]
        body = fn.attrs.get("body")
        if body is not None:
            for decl in body.find("VarDecl"):
                types = [c for c in decl.children if c.kind in ("ElementaryType", "Identifier", "Mapping", "ArrayType")]
                for i, name in enumerate(decl.attrs.get("names", [])):
                    if i < len(types):
                        self.locals[name] = types[i]

    def is_state(self, name: str | None) -> bool:
        return name is not None and name in self.state and name not in self.locals

    def type_of(self, name: str) -> Node | None:
        if name in self.locals:
            return self.locals[name]
        decl = self.state.get(name)
        return decl.children[0] if decl is not None and decl.children else None


def _state_vars(ast: ContractAst) -> dict[str, Node]:
    return {n.name: n for n in ast.root.find("StateVarDecl") if n.name}


def _functions(ast: ContractAst) -> Iterator[tuple[Node, Node]]:
    """``(contract, function)`` pairs for functions with bodies."""
    for contract in ast.contracts:
        for fn in contract.find("FunctionDef"):
            if fn.attrs.get("body") is not None:
                yield contract, fn


def _taint(body: Node, scope: _Scope, seed) -> Callable[[Node], set]:
    """Propagate labels from expressions into locals in textual order.

    ``seed(expr)`` returns the labels an expression carries on its own;
    identifiers of tainted locals contribute theirs. Returns the labelling
    function for arbitrary expressions of the body.
    """
    taint: dict[str, set] = {}

    def labels(expr: Node) -> set:
        out = set(seed(expr))
        for ident in _identifiers(expr):
            out |= taint.get(ident.name, set()) if ident.name in scope.locals else set()
        return out

    steps = []
    for decl in body.find("VarDecl"):
        value = decl.children[-1] if decl.children and decl.children[-1].kind not in ("ElementaryType", "Mapping", "ArrayType") else None
        if value is not None and len(decl.children) > 1:
            steps.append((decl.start, decl.attrs.get("names", []), value))
    for node in body.find("Assign"):
        target = node.children[0]
        names = [_root_name(t) for t in (target.children if target.kind == "Tuple" else [target])]
        steps.append((node.start, [n for n in names if n and n in scope.locals], node.children[1]))
    for _, names, value in sorted(steps, key=lambda s: s[0]):
        found = labels(value)
        for name in names:
            if found:
                taint.setdefault(name, set()).update(found)
    return labels


# -- class detectors ----------------------------------------------------------

def _detect_reentrancy(ast: ContractAst, state: dict[str, Node]) -> Iterator[tuple[str, Node, str, str]]:
    for _, fn in _functions(ast):
        if fn.attrs.get("mutability") in ("view", "pure") or REENTRANCY_GUARDS & set(fn.attrs.get("modifiers", [])):
            continue
        body = fn.attrs["body"]
        scope = _Scope(state, fn)
        labels = _taint(body, scope, lambda e: {i.name for i in _identifiers(e) if scope.is_state(i.name)})
        guards = _guard_conditions(body)
        writes = [(n, name) for n, name in _writes(body) if scope.is_state(name)]
        for node in body.walk():
            call = low_level_call(node)
            if call is None or not call.sends_value:
                continue
            guarded = set()
            for g in guards:
                if g.end <= node.start:
                    guarded |= labels(g)
            late = [w for w, name in writes if w.start >= node.end and name in guarded]
            if late:
                yield "RE", node, "reentrancy-state-after-call", HIGH


def _is_constructor(contract: Node, fn: Node) -> bool:
    return fn.attrs.get("kind") == "constructor" or (fn.attrs.get("kind") == "function" and fn.name == contract.name)


def _detect_access_control(ast: ContractAst, state: dict[str, Node]) -> Iterator[tuple[str, Node, str, str]]:
    for _, fn in _functions(ast):
        for cond in _guard_conditions(fn.attrs["body"]):
            for node in cond.walk():
                if not _is_member(node, "tx", "origin"):
                    continue
                # tx.origin == msg.sender only rejects contract callers
                parent = next((p for p in cond.walk() if node in p.children and p.kind == "BinaryOp"), None)
                if parent is not None and any(_is_member(c, "msg", "sender") for c in parent.children):
                    continue
                yield "AC", node, "tx-origin-auth", HIGH
    for contract, fn in _functions(ast):
        if fn.attrs.get("visibility") not in ("public", "external") or _is_constructor(contract, fn):
            continue
        if fn.attrs.get("modifiers"):
            continue
        body = fn.attrs["body"]
        scope = _Scope(state, fn)
        guards = [g for g in _guard_conditions(body) if _mentions_sender(g)]
        sensitive = []
        for node in body.walk():
            if node.kind == "Call" and node.children[0].kind == "Identifier" and node.children[0].name in ("selfdestruct", "suicide"):
                sensitive.append((node, "unprotected-selfdestruct"))
            elif node.kind == "Assign" and node.attrs.get("op") == "=":
                name = _root_name(node.children[0])
                if scope.is_state(name) and OWNER_LIKE.search(name):
                    sensitive.append((node, "unprotected-owner-write"))
        for node, detector in sensitive:
            if not any(g.end <= node.start for g in guards):
                yield "AC", node, detector, HIGH


def _is_uint_type(t: Node | None) -> bool:
    return t is not None and t.kind == "ElementaryType" and str(t.attrs.get("name", "")).startswith("uint")


def _element_type(t: Node | None) -> Node | None:
    if t is None:
        return None
    if t.kind == "Mapping":
        return t.children[1]
    if t.kind == "ArrayType":
        return t.children[0]
    return None


def _expr_type(expr: Node, scope: _Scope) -> str | None:
    """``"uint"``, ``"literal"`` or None (unknown / other)."""
    kind = expr.kind
    if kind == "Literal":
        return "literal" if re.match(r"^(0x[0-9a-fA-F]+|\d[\d_]*(\.\d+)?(e\d+)?)", str(expr.attrs.get("value", ""))) else None
    if kind == "Identifier":
        if expr.name == "now":
            return "uint"
        return "uint" if _is_uint_type(scope.type_of(expr.name)) else None
    if kind == "IndexAccess":
        base = expr.children[0]
        depth = 1
        while base.kind == "IndexAccess":
            base, depth = base.children[0], depth + 1
        if base.kind != "Identifier":
            return None
        t = scope.type_of(base.name)
        for _ in range(depth):
            t = _element_type(t)
        return "uint" if _is_uint_type(t) else None
    if kind == "MemberAccess":
        member = expr.attrs.get("member")
        if member in ("length", "balance") or _is_member(expr, "msg", "value") or (
            _is_member(expr, "block", member) and member in ("timestamp", "number", "difficulty", "gaslimit", "prevrandao")
        ):
            return "uint"
        return None
    if kind == "Call" and expr.children[0].kind == "ElementaryType":
        return "uint" if str(expr.children[0].attrs.get("name", "")).startswith("uint") else None
    if kind == "BinaryOp" and expr.attrs.get("op") in ("+", "-", "*", "/", "%", "**"):
        types = {_expr_type(c, scope) for c in expr.children}
        if "uint" in types:
            return "uint"
        return "literal" if types == {"literal"} else None
    if kind == "Tuple" and len(expr.children) == 1:
        return _expr_type(expr.children[0], scope)
    return None


def _detect_arithmetic(ast: ContractAst, state: dict[str, Node]) -> Iterator[tuple[str, Node, str, str]]:
    pragmas = [p for p in ast.root.children if p.kind == "Pragma" and p.attrs.get("name") == "solidity"]
    if not pragmas:
        return
    low = lowest_bound(pragmas[0].attrs.get("value", ""))
    if low is None or low >= (0, 8, 0):
        return
    if any(SAFE_MATH.search(u.name or "") for u in ast.root.find("Using")):
        return
    for _, fn in _functions(ast):
        scope = _Scope(state, fn)
        for node in fn.attrs["body"].walk():
            if node.kind == "BinaryOp" and node.attrs.get("op") in ("+", "-", "*", "**"):
                types = [_expr_type(c, scope) for c in node.children]
            elif node.kind == "Assign" and node.attrs.get("op") in ("+=", "-=", "*="):
                types = [_expr_type(c, scope) for c in node.children]
            else:
                continue
            if "uint" in types:
                yield "AR", node, "unchecked-uint-arithmetic", HIGH


def _detect_unchecked_calls(ast: ContractAst, state: dict[str, Node]) -> Iterator[tuple[str, Node, str, str]]:
    for _, fn in _functions(ast):
        for stmt in fn.attrs["body"].find("ExpressionStmt"):
            if not stmt.children:
                continue
            call = low_level_call(stmt.children[0])
            if call is not None and call.kind != "transfer":
                yield "ULLC", call.node, f"unchecked-{call.kind}", HIGH


def _is_dynamic_array(t: Node | None) -> bool:
    return t is not None and t.kind == "ArrayType" and str(t.attrs.get("type", "")).endswith("[]")


def _detect_dos(ast: ContractAst, state: dict[str, Node]) -> Iterator[tuple[str, Node, str, str]]:
    for _, fn in _functions(ast):
        scope = _Scope(state, fn)
        for loop in fn.attrs["body"].find("For", "While", "DoWhile"):
            cond = loop.attrs.get("cond")
            if cond is None:
                continue
            bounded = any(
                n.kind == "MemberAccess" and n.attrs.get("member") == "length" and _is_dynamic_array(scope.type_of(_root_name(n.children[0]) or ""))
                for n in cond.walk()
            )
            if not bounded:
                continue
            body = loop.attrs.get("body")
            for node in body.walk() if body is not None else ():
                if low_level_call(node) is not None:
                    yield "DoS", loop, "loop-external-call", HIGH
                    break
                if (
                    node.kind == "Call"
                    and node.children[0].kind == "MemberAccess"
                    and node.children[0].attrs.get("member") == "push"
                    and scope.is_state(_root_name(node.children[0].children[0]))
                ):
                    yield "DoS", loop, "loop-unbounded-growth", HIGH
                    break


def _is_randomish(expr: Node) -> bool:
    """A hash or modulo of block attributes, or ``blockhash`` itself."""
    for node in expr.walk():
        if _callee_name(node) == "blockhash":
            return True
        if node.kind == "Call" and _callee_name(node) in HASHES and any(_is_block_source(n) for a in _args(node) for n in a.walk()):
            return True
        if node.kind == "BinaryOp" and node.attrs.get("op") == "%" and any(_is_block_source(n) for n in node.children[0].walk()):
            return True
    return False


def _sinks(body: Node) -> list[Node]:
    """Expressions that steer control flow or pick a storage slot."""
    out = list(_guard_conditions(body))
    out += [n.children[1] for n in body.find("IndexAccess") if len(n.children) > 1]
    return out


def _detect_bad_randomness(ast: ContractAst, state: dict[str, Node]) -> Iterator[tuple[str, Node, str, str]]:
    for _, fn in _functions(ast):
        body = fn.attrs["body"]
        scope = _Scope(state, fn)
        labels = _taint(body, scope, lambda e: {"rand"} if _is_randomish(e) else set())
        seen = set()
        for sink in _sinks(body):
            if "rand" in labels(sink) and sink.start not in seen:
                seen.add(sink.start)
                yield "BR", sink, "block-attribute-randomness", HIGH


def _inside_randomness(expr: Node, target: Node) -> bool:
    for node in expr.walk():
        if node.kind == "Call" and _callee_name(node) in HASHES and any(target is n for a in _args(node) for n in a.walk()):
            return True
        if node.kind == "BinaryOp" and node.attrs.get("op") == "%" and any(target is n for n in node.children[0].walk()):
            return True
    return False


def _detect_timestamp(ast: ContractAst, state: dict[str, Node]) -> Iterator[tuple[str, Node, str, str]]:
    for _, fn in _functions(ast):
        body = fn.attrs["body"]
        scope = _Scope(state, fn)

        def seed(expr: Node) -> set:
            return {"time"} if any(_is_timestamp(n) and not _inside_randomness(expr, n) for n in expr.walk()) else set()

        labels = _taint(body, scope, seed)
        sinks = _sinks(body)
        for node in body.walk():
            call = low_level_call(node)
            if call is not None:
                sinks.extend(call.value_args)
        seen = set()
        for sink in sinks:
            if "time" in labels(sink) and sink.start not in seen:
                seen.add(sink.start)
                yield "TM", sink, "timestamp-dependence", HIGH


def _detect_front_running(ast: ContractAst, state: dict[str, Node]) -> Iterator[tuple[str, Node, str, str]]:
    setters = []
    for contract, fn in _functions(ast):
        if fn.attrs.get("visibility") not in ("public", "external") or _is_constructor(contract, fn) or fn.attrs.get("modifiers"):
            continue
        body = fn.attrs["body"]
        if any(_mentions_sender(g) for g in _guard_conditions(body)):
            continue
        scope = _Scope(state, fn)
        for node, name in _writes(body):
            if node.kind == "Assign" and scope.is_state(name) and PRICE_LIKE.search(name):
                setters.append((fn, node, name))
    for fn, node, name in setters:
        for _, other in _functions(ast):
            if other is fn:
                continue
            body = other.attrs["body"]
            pays = other.attrs.get("mutability") == "payable" or any(low_level_call(n) for n in body.walk())
            if pays and any(i.name == name for i in _identifiers(body)):
                yield "FR", node, "unprotected-price-update", HEURISTIC
                break


DETECTORS = (
    _detect_reentrancy,
    _detect_access_control,
    _detect_arithmetic,
    _detect_unchecked_calls,
    _detect_dos,
    _detect_bad_randomness,
    _detect_front_running,
    _detect_timestamp,
)


def _byte_offset(text: str):
    if text.isascii():
        return lambda i: i
    return lambda i: len(text[:i].encode("utf-8"))


def detect_ast(ast: ContractAst) -> FindingList:
    state = _state_vars(ast)
    to_bytes = _byte_offset(ast.source)
    found = {}
    for detector in DETECTORS:
        for cls, node, name, confidence in detector(ast, state):
            span = (to_bytes(node.start), to_bytes(node.end))
            found.setdefault((cls, span, name), VulnFinding(cls, span, name, confidence))
    return FindingList(sorted(found.values(), key=lambda f: (f.span, f.cls, f.detector)))


def detect(source: str) -> FindingList:
    """Union of all class detectors; an unparseable source yields an empty, flagged list."""
    try:
        ast = parse(tokenize(source))
    except (LexError, ParseError) as exc:
        log.info("analysis failed: %s", exc)
        return FindingList(analysis_failed=True, reason=str(exc))
    return detect_ast(ast)
