"""Tree features used by the CodeBLEU syntax and dataflow components."""

from __future__ import annotations

from collections import Counter

from .ast import ContractAst, Node

# Node kinds whose identifier children name a type, not a variable.
_TYPE_KINDS = frozenset(["ElementaryType", "Mapping", "ArrayType"])


def node_label(node: Node) -> str:
    """Identifier- and literal-free label of a single node."""
    if node.opaque:
        return "Opaque"
    kind = node.kind
    if kind == "Identifier":
        return "ID"
    if kind == "Literal":
        return "LIT"
    if kind in ("BinaryOp", "UnaryOp", "Assign"):
        return f"{kind}[{node.attrs['op']}]"
    if kind == "ElementaryType":
        return f"{kind}[{node.attrs.get('name')}]"
    if kind == "ContractDef":
        return f"{kind}[{node.attrs.get('kind')}]"
    if kind == "FunctionDef":
        return f"{kind}[{node.attrs.get('kind')}]"
    return kind


def subtrees(ast: ContractAst | Node, min_depth: int = 2) -> Counter:
    """Multiset of serialized subtrees whose depth is at least ``min_depth``."""
    if min_depth < 1:
        raise ValueError("min_depth must be >= 1")
    root = ast.root if isinstance(ast, ContractAst) else ast
    out: Counter = Counter()

    def visit(node: Node) -> tuple[str, int]:
        if not node.children:
            text, depth = node_label(node), 1
        else:
            parts = [visit(c) for c in node.children]
            text = "(" + node_label(node) + " " + " ".join(p[0] for p in parts) + ")"
            depth = 1 + max(p[1] for p in parts)
        if depth >= min_depth:
            out[text] += 1
        return text, depth

    visit(root)
    return out


class _DefUse:
    """Collects def/use events of one function in evaluation order."""

    def __init__(self):
        self.events: list[tuple[str, str, int]] = []  # (kind, name, position)

    def define(self, name: str | None, pos: int | None):
        if name and pos is not None:
            self.events.append(("def", name, pos))

    def use(self, node: Node):
        self.events.append(("use", node.name, node.start))

    def expr(self, node: Node | None):
        if node is None:
            return
        kind = node.kind
        if kind == "Identifier":
            self.use(node)
        elif kind == "Assign":
            lhs, rhs = node.children
            self.expr(rhs)
            self.target(lhs, compound=node.attrs["op"] != "=")
        elif kind == "UnaryOp" and node.attrs["op"] in ("++", "--", "delete"):
            self.target(node.children[0], compound=node.attrs["op"] != "delete")
        elif kind in _TYPE_KINDS or kind == "New":
            return
        elif kind == "VarDecl":
            self.declaration(node)
        else:
            for child in node.children:
                self.expr(child)

    def target(self, node: Node, compound: bool):
        if node.kind == "Identifier":
            if compound:
                self.use(node)
            self.define(node.name, node.start)
        elif node.kind == "Tuple":
            for child in node.children:
                self.target(child, compound)
        elif node.kind in ("IndexAccess", "MemberAccess"):
            base = node.children[0]
            for child in node.children[1:]:
                self.expr(child)
            self.target(base, compound)
        else:
            self.expr(node)

    def declaration(self, node: Node):
        # children: [type, init?] or, for tuples, [types..., init]
        if node.attrs.get("type") == "tuple":
            init = node.children[-1]
        else:
            init = node.children[1] if len(node.children) == 2 else None
        self.expr(init)
        for name, pos in zip(node.attrs.get("names", []), node.attrs.get("name_pos", [])):
            self.define(name, pos)

    def statement(self, node: Node | None):
        if node is None:
            return
        kind = node.kind
        if kind == "VarDecl":
            self.declaration(node)
        elif kind in ("Block", "Unchecked"):
            for child in node.children:
                self.statement(child)
        elif kind == "If":
            self.expr(node.attrs["cond"])
            self.statement(node.attrs["then"])
            self.statement(node.attrs["orelse"])
        elif kind == "For":
            init = node.attrs["init"]
            if init is not None:
                self.statement(init)
            self.expr(node.attrs["cond"])
            self.statement(node.attrs["body"])
            self.expr(node.attrs["post"])
        elif kind in ("While", "DoWhile"):
            if kind == "While":
                self.expr(node.attrs["cond"])
                self.statement(node.attrs["body"])
            else:
                self.statement(node.attrs["body"])
                self.expr(node.attrs["cond"])
        elif kind in ("Assembly",) or node.opaque:
            return
        elif kind == "Try":
            for child in node.children:
                if child.kind == "Block":
                    self.statement(child)
                elif child.kind == "Parameter":
                    self.define(child.name, child.attrs.get("name_pos"))
                else:
                    self.expr(child)
        else:
            for child in node.children:
                self.expr(child)


def function_def_use_edges(fn: Node) -> set[tuple[int, int, str]]:
    """Def-use edges of one function or modifier, positionally normalized.

    Site indices count variable occurrences (definitions and reads) in
    textual order within the function; variables are renamed ``var_k`` in
    order of first definition.
    """
    collector = _DefUse()
    for child in fn.children:
        if child.kind == "Parameter":
            collector.define(child.name, child.attrs.get("name_pos"))
    body = fn.attrs.get("body")
    if body is not None:
        collector.statement(body)

    positions = sorted({pos for _, _, pos in collector.events})
    rank = {pos: i for i, pos in enumerate(positions)}
    last_def: dict[str, int] = {}
    var_ids: dict[str, str] = {}
    edges = set()
    for kind, name, pos in collector.events:
        if kind == "def":
            last_def[name] = pos
            var_ids.setdefault(name, f"var_{len(var_ids)}")
        elif name in last_def:
            edges.add((rank[last_def[name]], rank[pos], var_ids[name]))
    return edges


def def_use_edges(ast: ContractAst) -> Counter:
    """Multiset of per-function def-use edges over the whole source unit."""
    out: Counter = Counter()
    for fn in ast.root.find("FunctionDef", "ModifierDef"):
        out.update(function_def_use_edges(fn))
    return out
