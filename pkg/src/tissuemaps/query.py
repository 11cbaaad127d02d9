"""Composition query language: AST, parser, serializer.

Grammar (case-insensitive keywords, whitespace free-form):

    expr       := term (OR term)*
    term       := factor (AND factor)*
    factor     := NOT factor | '(' expr ')' | comparison | organ | has
    comparison := layer '.' key op number ['@' mode]
    organ      := 'organ' '=' code
    has        := 'has' '(' layer '.' key ')'

Layers are source|tissue|alteration; ops are < <= = >= >; modes are
per_image|per_specimen|per_content (default per_specimen). Keys are
profile codes or names and stay unresolved until evaluation. Empty
input is the match-all query.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .composition import Mode
from .errors import QuerySyntaxError, TissueMapsError
from .profiles import LayerKind

OPS = ("<=", ">=", "<", ">", "=")
DEFAULT_MODE = Mode.PER_SPECIMEN


@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class MatchAll(Node):
    pass


@dataclass(frozen=True)
class Comparison(Node):
    layer: LayerKind
    key: str
    op: str
    threshold: float
    mode: Mode = DEFAULT_MODE
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class OrganIs(Node):
    code: str
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class HasClass(Node):
    layer: LayerKind
    key: str
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Not(Node):
    item: Node


@dataclass(frozen=True)
class And(Node):
    items: tuple[Node, ...]

    def __post_init__(self) -> None:
        if len(self.items) < 2:
            raise ValueError("And needs at least two operands")


@dataclass(frozen=True)
class Or(Node):
    items: tuple[Node, ...]

    def __post_init__(self) -> None:
        if len(self.items) < 2:
            raise ValueError("Or needs at least two operands")


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<op><=|>=|=|<|>)"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
    r"|(?P<at>@)"
    r"|(?P<symbol>[A-Za-z_][A-Za-z0-9_.\-]*)"
)

_KEYWORDS = {"and", "or", "not", "has", "organ"}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _lex(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        if kind != "ws":
            value = match.group()
            if kind == "symbol" and value.lower() in _KEYWORDS:
                kind = value.lower()
            tokens.append(_Token(kind, value, pos))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], length: int, default_mode: Mode):
        self.tokens = tokens
        self.pos = 0
        self.length = length
        self.default_mode = default_mode

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, kind: str | None = None) -> _Token:
        token = self.peek()
        if token is None:
            raise QuerySyntaxError("unexpected end of query", self.length)
        if kind is not None and token.kind != kind:
            raise QuerySyntaxError(
                f"expected {kind}, found {token.text!r}", token.offset
            )
        self.pos += 1
        return token

    def expr(self) -> Node:
        items = [self.term()]
        while (token := self.peek()) is not None and token.kind == "or":
            self.take()
            items.append(self.term())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def term(self) -> Node:
        items = [self.factor()]
        while (token := self.peek()) is not None and token.kind == "and":
            self.take()
            items.append(self.factor())
        return items[0] if len(items) == 1 else And(tuple(items))

    def factor(self) -> Node:
        token = self.peek()
        if token is None:
            raise QuerySyntaxError("unexpected end of query", self.length)
        if token.kind == "not":
            self.take()
            return Not(self.factor())
        if token.kind == "lparen":
            self.take()
            inner = self.expr()
            self.take("rparen")
            return inner
        if token.kind == "has":
            self.take()
            self.take("lparen")
            layer, key = self._layer_key()
            self.take("rparen")
            return HasClass(layer, key, offset=token.offset)
        if token.kind == "organ":
            self.take()
            eq = self.take("op")
            if eq.text != "=":
                raise QuerySyntaxError("organ accepts only '='", eq.offset)
            code = self.take("symbol")
            return OrganIs(code.text, offset=token.offset)
        if token.kind == "symbol":
            return self.comparison()
        raise QuerySyntaxError(f"unexpected token {token.text!r}", token.offset)

    def _layer_key(self) -> tuple[LayerKind, str]:
        token = self.take("symbol")
        layer_name, dot, key = token.text.partition(".")
        if not dot or not key:
            raise QuerySyntaxError("expected layer.key", token.offset)
        try:
            layer = LayerKind.from_string(layer_name)
        except TissueMapsError as exc:
            raise QuerySyntaxError(str(exc), token.offset) from exc
        return layer, key

    def comparison(self) -> Comparison:
        start = self.peek().offset
        layer, key = self._layer_key()
        op = self.take("op")
        number = self.take("number")
        threshold = float(number.text)
        if not 0.0 <= threshold <= 1.0:
            raise QuerySyntaxError(
                f"threshold {number.text} outside [0, 1]", number.offset
            )
        mode = self.default_mode
        if (token := self.peek()) is not None and token.kind == "at":
            self.take()
            mode_token = self.take("symbol")
            try:
                mode = Mode.from_string(mode_token.text)
            except ValueError as exc:
                raise QuerySyntaxError(str(exc), mode_token.offset) from exc
        return Comparison(layer, key, op.text, threshold, mode, offset=start)


def parse_query(text: str, default_mode: Mode = DEFAULT_MODE) -> Node:
    """Parse query text; empty or blank input matches everything.

    default_mode applies to comparisons without an explicit @mode.
    """
    tokens = _lex(text)
    if not tokens:
        return MatchAll()
    parser = _Parser(tokens, len(text), default_mode)
    node = parser.expr()
    if (trailing := parser.peek()) is not None:
        raise QuerySyntaxError(f"unexpected token {trailing.text!r}", trailing.offset)
    return node


def serialize_query(node: Node) -> str:
    """Render a query AST back to text; parse(serialize(q)) == q."""
    if isinstance(node, MatchAll):
        return ""
    if isinstance(node, Comparison):
        return (
            f"{node.layer.value}.{node.key} {node.op} {node.threshold!r}"
            f" @{node.mode.value}"
        )
    if isinstance(node, OrganIs):
        return f"organ = {node.code}"
    if isinstance(node, HasClass):
        return f"has({node.layer.value}.{node.key})"
    if isinstance(node, Not):
        return f"NOT {_wrapped(node.item, parenthesize=(And, Or))}"
    if isinstance(node, And):
        return " AND ".join(_wrapped(i, parenthesize=(And, Or)) for i in node.items)
    if isinstance(node, Or):
        return " OR ".join(_wrapped(i, parenthesize=(Or,)) for i in node.items)
    raise TypeError(f"not a query node: {node!r}")


def _wrapped(node: Node, parenthesize: tuple[type, ...]) -> str:
    text = serialize_query(node)
    return f"({text})" if isinstance(node, parenthesize) else text
