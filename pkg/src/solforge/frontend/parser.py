"""Tolerant recursive-descent parser for a practical subset of Solidity.

Statement-level failures are recovered by swallowing tokens up to the next
``;`` (or the closing brace of the enclosing block) into an opaque
``ExpressionStmt``. Only an unrecoverable top level (unbalanced braces, a
contract without a body) raises :class:`ParseError`.
"""

from __future__ import annotations

from ..errors import ParseError
from .ast import ContractAst, Node
from .lexer import (
    ELEMENTARY_TYPES,
    IDENTIFIER,
    KEYWORD,
    NUMBER,
    STRING,
    Token,
    TokenStream,
    tokenize,
)

ASSIGN_OPS = frozenset(["=", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<=", ">>=", ">>>="])
BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("|",),
    ("^",),
    ("&",),
    ("<<", ">>", ">>>"),
    ("+", "-"),
    ("*", "/", "%"),
]
PREFIX_OPS = frozenset(["!", "~", "-", "+", "++", "--", "delete"])
DATA_LOCATIONS = frozenset(["memory", "storage", "calldata"])
VISIBILITY = frozenset(["public", "private", "internal", "external"])
MUTABILITY = frozenset(["pure", "view", "payable", "constant"])
STATE_VAR_SPECIFIERS = VISIBILITY | frozenset(["constant", "immutable", "override", "transient"])
UNITS = frozenset(["wei", "gwei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks", "years"])
CONTRACT_KINDS = frozenset(["contract", "library", "interface"])
# keywords that can stand where an identifier-like callee is expected
CALLABLE_KEYWORDS = frozenset(["payable", "type", "delete"])


class _Fail(Exception):
    """Internal: the current construct does not parse; caller recovers."""


class _Parser:
    def __init__(self, stream: TokenStream):
        self.toks: tuple[Token, ...] = stream.tokens
        self.src = stream.source
        self.i = 0
        self.opaque = 0

    # -- token helpers -------------------------------------------------
    def peek(self, k: int = 0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at(self, *texts: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.text in texts and t.kind != STRING

    def eof(self) -> bool:
        return self.i >= len(self.toks)

    def advance(self) -> Token:
        t = self.peek()
        if t is None:
            raise _Fail("unexpected end of input")
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise _Fail(f"expected {text!r}")
        return self.advance()

    def accept(self, text: str) -> Token | None:
        return self.advance() if self.at(text) else None

    def here(self) -> int:
        t = self.peek()
        return t.start if t is not None else len(self.src)

    def last_end(self) -> int:
        return self.toks[self.i - 1].end if self.i > 0 else 0

    def node(self, node_kind: str, start: int, children=None, **attrs) -> Node:
        return Node(node_kind, start, self.last_end(), list(children or []), attrs)

    def ident(self) -> Token:
        t = self.peek()
        if t is None or t.kind != IDENTIFIER:
            raise _Fail("expected identifier")
        return self.advance()

    def name_token(self) -> Token:
        """Identifier or a keyword used as a name (e.g. ``receive``)."""
        t = self.peek()
        if t is None or t.kind not in (IDENTIFIER, KEYWORD):
            raise _Fail("expected name")
        return self.advance()

    def skip_balanced(self, open_: str, close: str) -> None:
        self.expect(open_)
        depth = 1
        while depth:
            t = self.advance()
            if t.kind == STRING:
                continue
            if t.text == open_:
                depth += 1
            elif t.text == close:
                depth -= 1

    def recover(self, start_index: int) -> Node:
        """Consume an unparseable statement and return it as an opaque node."""
        self.i = start_index
        depth = 0
        consumed = False
        while not self.eof():
            t = self.peek()
            if t.kind != STRING:
                if t.text == "}" and depth == 0:
                    break
                if t.text == "{":
                    depth += 1
                elif t.text == "}":
                    depth -= 1
                    if depth == 0:
                        self.advance()
                        consumed = True
                        if not self.at(";", "else", "catch", "while"):
                            break
                        continue
                elif t.text == ";" and depth == 0:
                    self.advance()
                    consumed = True
                    break
            self.advance()
            consumed = True
        if not consumed and not self.eof() and not self.at("}"):
            self.advance()
        self.opaque += 1
        start = self.toks[start_index].start if start_index < len(self.toks) else len(self.src)
        end = max(start, self.last_end())
        return Node("ExpressionStmt", start, end, [], {}, opaque=True)

    # -- top level -----------------------------------------------------
    def source_unit(self) -> Node:
        children = []
        while not self.eof():
            t = self.peek()
            if t.text == "pragma":
                children.append(self.pragma())
            elif t.text == "import":
                start = self.here()
                self._skip_to_semicolon()
                children.append(self.node("Import", start))
            elif t.text in CONTRACT_KINDS or (t.text == "abstract" and self.at("contract", k=1)):
                children.append(self.contract())
            else:
                children.append(self._guarded(self.member, top_level=True))
        return Node("SourceUnit", 0, len(self.src), children)

    def _skip_to_semicolon(self) -> None:
        while not self.eof() and not self.at(";"):
            self.advance()
        if self.eof():
            raise ParseError("missing ';'", len(self.src))
        self.advance()

    def pragma(self) -> Node:
        start = self.here()
        self.advance()
        parts = []
        while not self.eof() and not self.at(";"):
            parts.append(self.advance())
        if self.eof():
            raise ParseError("unterminated pragma", start)
        self.advance()
        name = parts[0].text if parts else ""
        value = self.src[parts[0].end : parts[-1].end].strip() if parts else ""
        return self.node("Pragma", start, name=name, value=value.strip())

    def contract(self) -> Node:
        start = self.here()
        abstract = bool(self.accept("abstract"))
        kind = self.advance().text
        t = self.peek()
        if t is None or t.kind != IDENTIFIER:
            raise ParseError(f"{kind} without a name", self.here())
        name = self.advance().text
        bases = []
        if self.accept("is"):
            try:
                while True:
                    base = self.ident().text
                    while self.accept("."):
                        base += "." + self.ident().text
                    bases.append(base)
                    if self.at("("):
                        self.skip_balanced("(", ")")
                    if not self.accept(","):
                        break
            except _Fail:
                raise ParseError(f"malformed inheritance list of {name}", start) from None
        if not self.at("{"):
            raise ParseError(f"{kind} {name} has no body", self.here())
        self.advance()
        members = []
        while not self.at("}"):
            if self.eof():
                raise ParseError(f"unterminated body of {kind} {name}", start)
            members.append(self._guarded(self.member))
        self.advance()
        return self.node("ContractDef", start, members, name=name, kind=kind, abstract=abstract, bases=bases)

    def _guarded(self, fn, top_level: bool = False) -> Node:
        mark = self.i
        try:
            return fn()
        except _Fail:
            node = self.recover(mark)
            if top_level and self.at("}"):
                # stray closing brace at file level: braces are balanced, so
                # this only happens after a damaged declaration
                self.advance()
                node.end = self.last_end()
            return node

    # -- members -------------------------------------------------------
    def member(self) -> Node:
        t = self.peek()
        text = t.text
        start = t.start
        if text in ("function", "constructor", "fallback", "receive") and t.kind == KEYWORD:
            return self.function()
        if text == "modifier":
            return self.modifier()
        if text == "event":
            self.advance()
            name = self.name_token().text
            self._skip_to_semicolon_fail()
            return self.node("EventDef", start, name=name)
        if text == "error" and self.peek(1) is not None and self.peek(1).kind == IDENTIFIER and self.at("(", k=2):
            self.advance()
            name = self.ident().text
            self._skip_to_semicolon_fail()
            return self.node("ErrorDef", start, name=name)
        if text == "struct":
            self.advance()
            name = self.ident().text
            fields = []
            self.expect("{")
            while not self.at("}"):
                fields.append(self.var_declaration(require_semicolon=True))
            self.expect("}")
            return self.node("StructDef", start, fields, name=name)
        if text == "enum":
            self.advance()
            name = self.ident().text
            self.skip_balanced("{", "}")
            return self.node("EnumDef", start, name=name)
        if text == "using":
            self.advance()
            lib = self.name_token().text
            while self.accept("."):
                lib += "." + self.name_token().text
            self._skip_to_semicolon_fail()
            return self.node("Using", start, name=lib)
        if text == "type" and self.peek(1) is not None and self.peek(1).kind == IDENTIFIER and self.at("is", k=2):
            self._skip_to_semicolon_fail()
            return self.node("ElementaryType", start, name="user-type")
        return self.state_var()

    def _skip_to_semicolon_fail(self) -> None:
        while not self.at(";"):
            if self.eof() or self.at("{", "}"):
                raise _Fail("expected ';'")
            self.advance()
        self.advance()

    def state_var(self) -> Node:
        start = self.here()
        type_node = self.type_name()
        specifiers = []
        while self.at(*STATE_VAR_SPECIFIERS):
            spec = self.advance().text
            if spec == "override" and self.at("("):
                self.skip_balanced("(", ")")
            specifiers.append(spec)
        name = self.ident().text
        children = [type_node]
        if self.accept("="):
            children.append(self.expression())
        self.expect(";")
        visibility = next((s for s in specifiers if s in VISIBILITY), "internal")
        return self.node(
            "StateVarDecl",
            start,
            children,
            name=name,
            type=type_node.attrs.get("type", ""),
            visibility=visibility,
            constant="constant" in specifiers or "immutable" in specifiers,
        )

    def parameters(self) -> list[Node]:
        self.expect("(")
        params = []
        while not self.at(")"):
            pstart = self.here()
            type_node = self.type_name()
            location = None
            while self.at(*DATA_LOCATIONS, "indexed", "payable"):
                location = self.advance().text
            name = None
            name_pos = None
            if self.peek() is not None and self.peek().kind == IDENTIFIER:
                tok = self.advance()
                name, name_pos = tok.text, tok.start
            params.append(
                self.node(
                    "Parameter",
                    pstart,
                    [type_node],
                    name=name,
                    name_pos=name_pos,
                    type=type_node.attrs.get("type", ""),
                    location=location,
                )
            )
            if not self.accept(","):
                break
        self.expect(")")
        return params

    def function(self) -> Node:
        start = self.here()
        kind = self.advance().text
        name = None
        if kind == "function" and not self.at("("):
            name = self.name_token().text
        elif kind != "function":
            name = kind
        params = self.parameters()
        visibility = None
        mutability = None
        modifiers = []
        returns: list[Node] = []
        virtual = False
        while not self.at("{", ";"):
            t = self.peek()
            if t is None:
                raise _Fail("unterminated function header")
            if t.text in VISIBILITY:
                visibility = self.advance().text
            elif t.text in MUTABILITY:
                mutability = self.advance().text
            elif t.text == "virtual":
                self.advance()
                virtual = True
            elif t.text == "override":
                self.advance()
                if self.at("("):
                    self.skip_balanced("(", ")")
            elif t.text == "returns":
                self.advance()
                returns = self.parameters()
            elif t.kind == IDENTIFIER:
                mod = self.advance().text
                while self.accept("."):
                    mod += "." + self.name_token().text
                if self.at("("):
                    self.skip_balanced("(", ")")
                modifiers.append(mod)
            else:
                raise _Fail(f"unexpected {t.text!r} in function header")
        children: list[Node] = list(params) + list(returns)
        body = None
        if self.accept(";") is None:
            body = self.block()
            children.append(body)
        node = self.node(
            "FunctionDef",
            start,
            children,
            name=name,
            kind=kind,
            visibility=visibility or ("public" if kind == "function" else "external" if kind in ("fallback", "receive") else "public"),
            explicit_visibility=visibility is not None,
            mutability=mutability,
            modifiers=modifiers,
            params=[p.attrs["name"] for p in params],
            returns=[p.attrs["name"] for p in returns],
            virtual=virtual,
        )
        node.attrs["body"] = body
        return node

    def modifier(self) -> Node:
        start = self.here()
        self.advance()
        name = self.ident().text
        params = self.parameters() if self.at("(") else []
        while not self.at("{", ";"):
            t = self.advance()
            if t.text == "override" and self.at("("):
                self.skip_balanced("(", ")")
        children = list(params)
        body = None
        if self.accept(";") is None:
            body = self.block()
            children.append(body)
        node = self.node("ModifierDef", start, children, name=name, params=[p.attrs["name"] for p in params])
        node.attrs["body"] = body
        return node

    # -- types ---------------------------------------------------------
    def type_name(self) -> Node:
        start = self.here()
        t = self.peek()
        if t is None:
            raise _Fail("expected type")
        if t.text == "mapping":
            self.advance()
            self.expect("(")
            key = self.type_name()
            if self.peek() is not None and self.peek().kind == IDENTIFIER:
                self.advance()
            self.expect("=>")
            value = self.type_name()
            if self.peek() is not None and self.peek().kind == IDENTIFIER:
                self.advance()
            self.expect(")")
            node = self.node("Mapping", start, [key, value])
            node.attrs["type"] = f"mapping({key.attrs['type']} => {value.attrs['type']})"
        elif t.text == "function" and t.kind == KEYWORD:
            self.advance()
            self.skip_balanced("(", ")")
            while self.at(*VISIBILITY, *MUTABILITY):
                self.advance()
            if self.accept("returns"):
                self.skip_balanced("(", ")")
            node = self.node("ElementaryType", start, name="function", type="function")
        elif t.text in ELEMENTARY_TYPES and t.kind == KEYWORD:
            self.advance()
            name = t.text
            if name == "address" and self.at("payable"):
                self.advance()
                name = "address payable"
            node = self.node("ElementaryType", start, name=name, type=name)
        elif t.kind == IDENTIFIER:
            name = self.advance().text
            while self.at(".") and self.peek(1) is not None and self.peek(1).kind == IDENTIFIER:
                self.advance()
                name += "." + self.advance().text
            node = self.node("Identifier", start, name=name, type=name)
        else:
            raise _Fail("expected type")
        while self.at("["):
            self.advance()
            dims = []
            if not self.at("]"):
                dims.append(self.expression())
            self.expect("]")
            inner = node.attrs["type"]
            node = self.node("ArrayType", start, [node] + dims, type=inner + ("[]" if not dims else "[N]"))
        return node

    # -- statements ----------------------------------------------------
    def block(self) -> Node:
        start = self.here()
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.eof():
                raise _Fail("unterminated block")
            stmts.append(self.statement())
        self.advance()
        return self.node("Block", start, stmts)

    def statement(self) -> Node:
        mark = self.i
        try:
            return self._statement()
        except _Fail:
            return self.recover(mark)

    def _statement(self) -> Node:
        t = self.peek()
        if t is None:
            raise _Fail("expected statement")
        start = t.start
        text = t.text if t.kind != STRING else None
        if text == "{":
            return self.block()
        if text == "if":
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.statement()
            children = [cond, then]
            other = None
            if self.accept("else"):
                other = self.statement()
                children.append(other)
            node = self.node("If", start, children)
            node.attrs.update(cond=cond, then=then, orelse=other)
            return node
        if text == "for":
            self.advance()
            self.expect("(")
            init = cond = post = None
            if not self.accept(";"):
                init = self.simple_statement()
                self.expect(";")
            if not self.at(";"):
                cond = self.expression()
            self.expect(";")
            if not self.at(")"):
                post = self.expression()
            self.expect(")")
            body = self.statement()
            node = self.node("For", start, [c for c in (init, cond, post, body) if c is not None])
            node.attrs.update(init=init, cond=cond, post=post, body=body)
            return node
        if text == "while":
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            body = self.statement()
            node = self.node("While", start, [cond, body])
            node.attrs.update(cond=cond, body=body)
            return node
        if text == "do":
            self.advance()
            body = self.statement()
            self.expect("while")
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            self.expect(";")
            node = self.node("DoWhile", start, [body, cond])
            node.attrs.update(cond=cond, body=body)
            return node
        if text == "return":
            self.advance()
            children = [] if self.at(";") else [self.expression()]
            self.expect(";")
            return self.node("Return", start, children)
        if text == "emit":
            self.advance()
            call = self.expression()
            self.expect(";")
            return self.node("Emit", start, [call])
        if text in ("break", "continue"):
            self.advance()
            self.expect(";")
            return self.node(text.capitalize(), start)
        if text == "unchecked" and self.at("{", k=1):
            self.advance()
            return self.node("Unchecked", start, [self.block()])
        if text == "assembly":
            self.advance()
            if self.peek() is not None and self.peek().kind == STRING:
                self.advance()
            if self.at("("):
                self.skip_balanced("(", ")")
            self.skip_balanced("{", "}")
            return self.node("Assembly", start)
        if text == "try":
            return self.try_statement()
        if text == "revert" and self.peek(1) is not None and self.peek(1).kind == IDENTIFIER:
            # revert with a custom error: revert Err(args);
            self.advance()
            callee = self.node("Identifier", start, name="revert")
            err = self.expression()
            self.expect(";")
            call = self.node("Call", start, [callee, err])
            return self.node("ExpressionStmt", start, [call])
        if text == "throw":
            self.advance()
            self.expect(";")
            return self.node("ExpressionStmt", start, [self.node("Identifier", start, name="throw")])
        return self.simple_statement(require_semicolon=True)

    def try_statement(self) -> Node:
        start = self.here()
        self.advance()
        expr = self.expression()
        children = [expr]
        if self.accept("returns"):
            children.extend(self.parameters())
        children.append(self.block())
        while self.accept("catch"):
            if self.peek() is not None and self.peek().kind == IDENTIFIER:
                self.advance()
            if self.at("("):
                children.extend(self.parameters())
            children.append(self.block())
        return self.node("Try", start, children)

    def simple_statement(self, require_semicolon: bool = False) -> Node:
        start = self.here()
        decl = self.try_declaration()
        if decl is not None:
            if require_semicolon:
                self.expect(";")
                decl.end = self.last_end()
            return decl
        expr = self.expression()
        if require_semicolon:
            self.expect(";")
        return self.node("ExpressionStmt", start, [expr])

    def var_declaration(self, require_semicolon: bool = False) -> Node:
        start = self.here()
        type_node = self.type_name()
        location = None
        while self.at(*DATA_LOCATIONS):
            location = self.advance().text
        name_tok = self.ident()
        children = [type_node]
        if self.accept("="):
            children.append(self.expression())
        if require_semicolon:
            self.expect(";")
        return self.node(
            "VarDecl",
            start,
            children,
            name=name_tok.text,
            names=[name_tok.text],
            name_pos=[name_tok.start],
            type=type_node.attrs.get("type", ""),
            location=location,
        )

    def try_declaration(self) -> Node | None:
        mark = self.i
        start = self.here()
        if self.at("("):
            # tuple declaration: (uint a, , bool b) = ...
            try:
                self.advance()
                names: list[str | None] = []
                positions: list[int] = []
                types: list[Node] = []
                while True:
                    if self.at(",", ")"):
                        names.append(None)
                    else:
                        tn = self.type_name()
                        while self.at(*DATA_LOCATIONS):
                            self.advance()
                        tok = self.ident()
                        names.append(tok.text)
                        positions.append(tok.start)
                        types.append(tn)
                    if self.accept(")"):
                        break
                    self.expect(",")
                if not any(names):
                    raise _Fail("not a declaration")
                self.expect("=")
                value = self.expression()
                return self.node(
                    "VarDecl",
                    start,
                    types + [value],
                    name=None,
                    names=[n for n in names if n],
                    name_pos=positions,
                    type="tuple",
                    location=None,
                )
            except _Fail:
                self.i = mark
                return None
        t = self.peek()
        if t is None or t.kind not in (IDENTIFIER, KEYWORD):
            return None
        if t.kind == KEYWORD and t.text not in ELEMENTARY_TYPES and t.text not in ("mapping", "function"):
            return None
        try:
            node = self.var_declaration()
        except _Fail:
            self.i = mark
            return None
        if not self.at(";", ")"):
            self.i = mark
            return None
        return node

    # -- expressions ---------------------------------------------------
    def expression(self) -> Node:
        lhs = self.conditional()
        t = self.peek()
        if t is not None and t.kind != STRING and t.text in ASSIGN_OPS:
            op = self.advance().text
            rhs = self.expression()
            return Node("Assign", lhs.start, rhs.end, [lhs, rhs], {"op": op})
        return lhs

    def conditional(self) -> Node:
        cond = self.binary(0)
        if self.accept("?"):
            a = self.expression()
            self.expect(":")
            b = self.expression()
            return Node("Conditional", cond.start, b.end, [cond, a, b], {})
        return cond

    def binary(self, level: int) -> Node:
        if level == len(BINARY_LEVELS):
            return self.exponent()
        ops = BINARY_LEVELS[level]
        lhs = self.binary(level + 1)
        while True:
            t = self.peek()
            if t is None or t.kind == STRING or t.text not in ops:
                return lhs
            op = self.advance().text
            rhs = self.binary(level + 1)
            lhs = Node("BinaryOp", lhs.start, rhs.end, [lhs, rhs], {"op": op})

    def exponent(self) -> Node:
        base = self.unary()
        if self.accept("**"):
            rhs = self.exponent()
            return Node("BinaryOp", base.start, rhs.end, [base, rhs], {"op": "**"})
        return base

    def unary(self) -> Node:
        t = self.peek()
        if t is not None and t.kind != STRING and t.text in PREFIX_OPS:
            start = t.start
            op = self.advance().text
            operand = self.unary()
            return Node("UnaryOp", start, operand.end, [operand], {"op": op, "prefix": True})
        return self.postfix()

    def postfix(self) -> Node:
        expr = self.primary()
        while True:
            if self.at("."):
                self.advance()
                member = self.name_token().text
                expr = Node("MemberAccess", expr.start, self.last_end(), [expr], {"member": member})
            elif self.at("["):
                self.advance()
                children = [expr]
                if not self.at("]"):
                    if not self.at(":"):
                        children.append(self.expression())
                    if self.accept(":") and not self.at("]"):
                        children.append(self.expression())
                self.expect("]")
                expr = Node("IndexAccess", expr.start, self.last_end(), children, {})
            elif self.at("("):
                args = self.call_arguments()
                kind = "Require" if expr.kind == "Identifier" and expr.name == "require" else "Call"
                expr = Node(kind, expr.start, self.last_end(), [expr] + args, {})
            elif self.at("{") and self.peek(1) is not None and self.peek(1).kind in (IDENTIFIER, KEYWORD) and self.at(":", k=2):
                names: list[str] = []
                values = self.named_values(names)
                expr = Node("CallOptions", expr.start, self.last_end(), [expr] + values, {"options": names})
            elif self.at("++", "--"):
                op = self.advance().text
                expr = Node("UnaryOp", expr.start, self.last_end(), [expr], {"op": op, "prefix": False})
            else:
                return expr

    def named_values(self, names: list[str] | None = None) -> list[Node]:
        self.expect("{")
        values = []
        while not self.at("}"):
            key = self.name_token().text
            if names is not None:
                names.append(key)
            self.expect(":")
            values.append(self.expression())
            if not self.accept(","):
                break
        self.expect("}")
        return values

    def call_arguments(self) -> list[Node]:
        self.expect("(")
        if self.at("{"):
            args = self.named_values()
            self.expect(")")
            return args
        args = []
        while not self.at(")"):
            args.append(self.expression())
            if not self.accept(","):
                break
        self.expect(")")
        return args

    def primary(self) -> Node:
        t = self.peek()
        if t is None:
            raise _Fail("expected expression")
        start = t.start
        if t.kind in (NUMBER, STRING):
            self.advance()
            value = t.text
            if t.kind == NUMBER and self.at(*UNITS):
                value += " " + self.advance().text
            return self.node("Literal", start, value=value)
        if t.kind == IDENTIFIER:
            self.advance()
            return self.node("Identifier", start, name=t.text)
        if t.kind == KEYWORD:
            if t.text in ("true", "false"):
                self.advance()
                return self.node("Literal", start, value=t.text)
            if t.text == "new":
                self.advance()
                tn = self.type_name()
                return self.node("New", start, [tn])
            if t.text in ELEMENTARY_TYPES:
                self.advance()
                name = t.text
                if name == "address" and self.at("payable"):
                    self.advance()
                    name = "address payable"
                node = self.node("ElementaryType", start, name=name, type=name)
                while self.at("[") and self.at("]", k=1):
                    self.advance()
                    self.advance()
                    node = self.node("ArrayType", start, [node], type=name + "[]")
                return node
            if t.text in CALLABLE_KEYWORDS and self.at("(", k=1):
                self.advance()
                return self.node("Identifier", start, name=t.text)
            raise _Fail(f"unexpected keyword {t.text!r}")
        if t.text == "(":
            self.advance()
            items: list[Node | None] = []
            while True:
                if self.at(",", ")"):
                    items.append(None)
                else:
                    items.append(self.expression())
                if self.accept(")"):
                    break
                self.expect(",")
            if len(items) == 1 and items[0] is not None:
                inner = items[0]
                return inner
            return self.node("Tuple", start, [x for x in items if x is not None], arity=len(items))
        if t.text == "[":
            self.advance()
            items = []
            while not self.at("]"):
                items.append(self.expression())
                if not self.accept(","):
                    break
            self.expect("]")
            return self.node("Tuple", start, items, array=True)
        raise _Fail(f"unexpected {t.text!r}")


def _check_braces(stream: TokenStream) -> None:
    depth = 0
    for t in stream.tokens:
        if t.kind == STRING:
            continue
        if t.text == "{":
            depth += 1
        elif t.text == "}":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced '}'", t.start)
    if depth:
        raise ParseError("unbalanced '{'", len(stream.source))


def parse(tokens: TokenStream | str) -> ContractAst:
    """Parse a token stream (or raw source) into a :class:`ContractAst`."""
    stream = tokens if isinstance(tokens, TokenStream) else tokenize(tokens)
    _check_braces(stream)
    p = _Parser(stream)
    root = p.source_unit()
    return ContractAst(root, stream.source, p.opaque)


def is_single_contract(ast: ContractAst) -> bool:
    """Exactly one top-level contract, library or interface."""
    return len(ast.contracts) == 1
