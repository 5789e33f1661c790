from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

# Kinds used by the parser. The first block is the core set the metrics and
# detectors rely on; the second block covers constructs that would otherwise
# have to be squeezed into ExpressionStmt.
NODE_KINDS = frozenset(
    """
    SourceUnit Pragma ContractDef FunctionDef ModifierDef EventDef StateVarDecl Block If
    For While Require ExpressionStmt Assign Call MemberAccess Identifier Literal
    Import Using StructDef EnumDef ErrorDef VarDecl Parameter ElementaryType
    Return Emit BinaryOp UnaryOp IndexAccess Conditional Tuple New CallOptions
    Unchecked Assembly Break Continue DoWhile Try Mapping ArrayType
    """.split()
)


@dataclass(eq=False)
class Node:
    kind: str
    start: int
    end: int
    children: list["Node"] = field(default_factory=list)
    attrs: dict = field(default_factory=dict)
    opaque: bool = False

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def find(self, *kinds: str) -> list["Node"]:
        return [n for n in self.walk() if n.kind in kinds]

    @property
    def name(self) -> str | None:
        return self.attrs.get("name")

    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)

    def text(self, source: str) -> str:
        return source[self.start : self.end]

    def __repr__(self) -> str:
        extra = f" {self.attrs}" if self.attrs else ""
        return f"<{self.kind} [{self.start}:{self.end}]{extra} children={len(self.children)}>"


@dataclass
class ContractAst:
    root: Node
    source: str
    opaque_count: int = 0

    @property
    def clean(self) -> bool:
        return self.opaque_count == 0

    @property
    def contracts(self) -> list[Node]:
        return [c for c in self.root.children if c.kind == "ContractDef"]

    def functions(self) -> list[Node]:
        return self.root.find("FunctionDef", "ModifierDef")
