"""Boolean-algebra expression language for audience queries.

Two leaf vocabularies share one tree shape: quoted surface terms (the output
of formal query formulation) and class:entity predicates (after augmentation).
Canonical form flattens nested AND/OR and eliminates double negation; parsers
always return canonical trees and the printers invert them exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union as TUnion

from .model import Iri


class ExprSyntaxError(ValueError):
    """Malformed expression text."""


class ExprInvariantError(ValueError):
    """A tree violating canonical-form invariants."""


class UnlinkedTermError(KeyError):
    """Augmentation hit a term leaf with no entity link."""

    def __init__(self, term: str) -> None:
        super().__init__(term)
        self.term = term

    def __str__(self) -> str:
        return f"no entity link for term {self.term!r}"


@dataclass(frozen=True)
class TermLeaf:
    term: str

    def __post_init__(self) -> None:
        if not self.term:
            raise ExprInvariantError("term leaf must be non-empty")


@dataclass(frozen=True)
class PredLeaf:
    class_iri: Iri
    entity_iri: Iri


@dataclass(frozen=True)
class And:
    children: tuple[Expr, ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise ExprInvariantError("AND needs at least 2 children")


@dataclass(frozen=True)
class Or:
    children: tuple[Expr, ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise ExprInvariantError("OR needs at least 2 children")


@dataclass(frozen=True)
class Not:
    child: Expr


Expr = TUnion[And, Or, Not, TermLeaf, PredLeaf]
TermExpr = Expr  # TermLeaf leaves
EntityExpr = Expr  # PredLeaf leaves


@dataclass(frozen=True)
class PrefixHeader:
    class_ns: Iri
    entity_ns: Iri

    def __post_init__(self) -> None:
        for ns in (self.class_ns, self.entity_ns):
            if not ns.value.endswith("/"):
                raise ExprInvariantError(f"namespace must end in '/': {ns.value}")


def canonicalize(e: Expr) -> Expr:
    """Flatten AND-under-AND / OR-under-OR and drop double negation."""
    if isinstance(e, (TermLeaf, PredLeaf)):
        return e
    if isinstance(e, Not):
        child = canonicalize(e.child)
        if isinstance(child, Not):
            return child.child
        return Not(child)
    kind = type(e)
    flat: list[Expr] = []
    for child in e.children:
        child = canonicalize(child)
        if isinstance(child, kind):
            flat.extend(child.children)
        else:
            flat.append(child)
    return kind(tuple(flat))


def check_canonical(e: Expr) -> None:
    if isinstance(e, (TermLeaf, PredLeaf)):
        return
    if isinstance(e, Not):
        if isinstance(e.child, Not):
            raise ExprInvariantError("NOT directly under NOT")
        check_canonical(e.child)
        return
    for child in e.children:
        if isinstance(child, type(e)):
            raise ExprInvariantError(f"{type(e).__name__} directly under itself")
        check_canonical(child)


def leaves(e: Expr) -> list[Expr]:
    """Leaf nodes in left-to-right order."""
    if isinstance(e, (TermLeaf, PredLeaf)):
        return [e]
    if isinstance(e, Not):
        return leaves(e.child)
    return [leaf for child in e.children for leaf in leaves(child)]


def skeleton(e: Expr) -> str:
    """Operator shape with leaves erased, for structure comparisons."""
    if isinstance(e, (TermLeaf, PredLeaf)):
        return "*"
    if isinstance(e, Not):
        return f"NOT({skeleton(e.child)})"
    op = "AND" if isinstance(e, And) else "OR"
    return f"{op}({','.join(skeleton(c) for c in e.children)})"


# -- tokenizing ---------------------------------------------------------------

_PNAME_RE = re.compile(r"([A-Za-z][A-Za-z0-9_\-]*):([A-Za-z0-9_\-]+)")
_KEYWORDS = ("AND", "OR", "NOT")


@dataclass(frozen=True)
class _Token:
    kind: str  # 'op' | 'lparen' | 'rparen' | 'term' | 'pname' | 'dot'
    value: str
    pos: int


def _tokenize(text: str, *, quoted_terms: bool) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "(":
            tokens.append(_Token("lparen", "(", i))
            i += 1
        elif c == ")":
            tokens.append(_Token("rparen", ")", i))
            i += 1
        elif c == ".":
            tokens.append(_Token("dot", ".", i))
            i += 1
        elif c == '"':
            if not quoted_terms:
                raise ExprSyntaxError(f"unexpected quote at position {i}")
            j = i + 1
            chars: list[str] = []
            while j < n and text[j] != '"':
                if text[j] == "\\":
                    if j + 1 >= n or text[j + 1] not in ('"', "\\"):
                        raise ExprSyntaxError(f"bad escape at position {j}")
                    chars.append(text[j + 1])
                    j += 2
                else:
                    chars.append(text[j])
                    j += 1
            if j >= n:
                raise ExprSyntaxError("unbalanced quote")
            tokens.append(_Token("term", "".join(chars), i))
            i = j + 1
        else:
            word = re.match(r"[A-Za-z][A-Za-z0-9_\-:]*", text[i:])
            if not word:
                raise ExprSyntaxError(f"unexpected character {c!r} at position {i}")
            value = word.group(0)
            if value in _KEYWORDS:
                tokens.append(_Token("op", value, i))
            elif _PNAME_RE.fullmatch(value):
                tokens.append(_Token("pname", value, i))
            else:
                raise ExprSyntaxError(f"unexpected token {value!r} at position {i}")
            i += len(value)
    return tokens


# -- parsing ------------------------------------------------------------------


class _Parser:
    """Precedence-climbing parser shared by both grammars.

    OR is loosest, then AND, then NOT; atoms are quoted terms or
    class:Local ( entity:Local ) predicates or parenthesized groups.
    """

    def __init__(self, tokens: list[_Token], header: PrefixHeader | None) -> None:
        self.tokens = tokens
        self.header = header
        self.i = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError("unexpected end of expression")
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            got = f"{tok.value!r}" if tok else "end of input"
            raise ExprSyntaxError(f"expected {what}, got {got}")
        return self.take()

    def parse_expr(self) -> Expr:
        node = self.parse_and()
        children = [node]
        while (tok := self.peek()) and tok.kind == "op" and tok.value == "OR":
            self.take()
            children.append(self.parse_and())
        return Or(tuple(children)) if len(children) > 1 else node

    def parse_and(self) -> Expr:
        node = self.parse_unary()
        children = [node]
        while (tok := self.peek()) and tok.kind == "op" and tok.value == "AND":
            self.take()
            children.append(self.parse_unary())
        return And(tuple(children)) if len(children) > 1 else node

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok and tok.kind == "op" and tok.value == "NOT":
            self.take()
            return Not(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError("dangling operator: missing operand")
        if tok.kind == "lparen":
            self.take()
            node = self.parse_expr()
            self.expect("rparen", "')'")
            return node
        if tok.kind == "term":
            self.take()
            if not tok.value:
                raise ExprSyntaxError("empty quoted term")
            return TermLeaf(tok.value)
        if tok.kind == "pname":
            return self.parse_predicate()
        raise ExprSyntaxError(f"unexpected token {tok.value!r} at position {tok.pos}")

    def parse_predicate(self) -> Expr:
        assert self.header is not None
        class_tok = self.take()
        prefix, local = class_tok.value.split(":", 1)
        if prefix not in ("class", "entity"):
            raise ExprSyntaxError(f"unknown prefix {prefix!r}")
        if prefix != "class":
            raise ExprSyntaxError(
                f"malformed predicate: expected class:Local, got {class_tok.value!r}"
            )
        self.expect("lparen", "'(' after class name")
        entity_tok = self.expect("pname", "entity:Local")
        eprefix, elocal = entity_tok.value.split(":", 1)
        if eprefix not in ("class", "entity"):
            raise ExprSyntaxError(f"unknown prefix {eprefix!r}")
        if eprefix != "entity":
            raise ExprSyntaxError(
                f"malformed predicate: expected entity:Local, got {entity_tok.value!r}"
            )
        self.expect("rparen", "')' after entity name")
        return PredLeaf(
            class_iri=Iri(self.header.class_ns.value + local),
            entity_iri=Iri(self.header.entity_ns.value + elocal),
        )


def parse_term_expr(text: str) -> TermExpr:
    """Parse the quoted-term grammar into a canonical tree."""
    tokens = _tokenize(text, quoted_terms=True)
    if not tokens:
        raise ExprSyntaxError("empty expression")
    for tok in tokens:
        if tok.kind in ("pname", "dot"):
            raise ExprSyntaxError(
                f"unexpected token {tok.value!r} in term expression"
            )
    parser = _Parser(tokens, header=None)
    node = parser.parse_expr()
    if parser.peek() is not None:
        tok = parser.peek()
        raise ExprSyntaxError(f"trailing input at position {tok.pos}: {tok.value!r}")
    return canonicalize(node)


_HEADER_RE = re.compile(
    r"^\s*class:\s*<([^<>\s]+)>\s*;\s*entity:\s*<([^<>\s]+)>\s*$"
)


def parse_header(line: str) -> PrefixHeader:
    m = _HEADER_RE.match(line)
    if not m:
        raise ExprSyntaxError(
            "first line must declare prefixes: class: <IRI> ; entity: <IRI>"
        )
    return PrefixHeader(class_ns=Iri(m.group(1)), entity_ns=Iri(m.group(2)))


def parse_entity_expr(text: str) -> tuple[PrefixHeader, EntityExpr]:
    """Parse a prefix header line plus a predicate expression ending in ' .'."""
    stripped = text.strip()
    if not stripped:
        raise ExprSyntaxError("empty expression")
    first, _, body = stripped.partition("\n")
    header = parse_header(first)
    if not body.strip():
        raise ExprSyntaxError("missing expression body after header")
    tokens = _tokenize(body, quoted_terms=False)
    if not tokens or tokens[-1].kind != "dot":
        raise ExprSyntaxError("expression must end with ' .'")
    for tok in tokens[:-1]:
        if tok.kind == "dot":
            raise ExprSyntaxError(f"unexpected '.' at position {tok.pos}")
    parser = _Parser(tokens[:-1], header=header)
    node = parser.parse_expr()
    if parser.peek() is not None:
        tok = parser.peek()
        raise ExprSyntaxError(f"trailing input at position {tok.pos}: {tok.value!r}")
    return header, canonicalize(node)


# -- printing -------------------------------------------------------------------


def _escape_term(term: str) -> str:
    return term.replace("\\", "\\\\").replace('"', '\\"')


def _print_node(e: Expr, header: PrefixHeader | None) -> str:
    if isinstance(e, TermLeaf):
        return f'"{_escape_term(e.term)}"'
    if isinstance(e, PredLeaf):
        if header is None:
            raise ExprInvariantError("predicate leaf in a term expression")
        return f"class:{_local(e.class_iri, header.class_ns)} ( entity:{_local(e.entity_iri, header.entity_ns)} )"
    if isinstance(e, Not):
        inner = _print_node(e.child, header)
        if isinstance(e.child, (And, Or)):
            return f"NOT ( {inner} )" if header else f"NOT ({inner})"
        return f"NOT {inner}"
    parts = []
    for child in e.children:
        rendered = _print_node(child, header)
        if isinstance(e, And) and isinstance(child, Or):
            rendered = f"( {rendered} )" if header else f"({rendered})"
        parts.append(rendered)
    op = " AND " if isinstance(e, And) else " OR "
    return op.join(parts)


def _local(iri: Iri, ns: Iri) -> str:
    if not iri.value.startswith(ns.value):
        raise ExprInvariantError(f"{iri.value} is outside namespace {ns.value}")
    local = iri.value[len(ns.value) :]
    if not re.fullmatch(r"[A-Za-z0-9_\-]+", local):
        raise ExprInvariantError(f"local name not printable: {local!r}")
    return local


def print_term_expr(e: TermExpr) -> str:
    check_canonical(e)
    return _print_node(e, header=None)


def print_entity_body(e: EntityExpr, header: PrefixHeader) -> str:
    """The predicate expression alone, without header line or terminator."""
    check_canonical(e)
    return _print_node(e, header=header)


def print_canonical(e: EntityExpr, header: PrefixHeader) -> str:
    """Header line plus a one-line body terminated by ' .'."""
    check_canonical(e)
    body = _print_node(e, header=header)
    return (
        f"class: <{header.class_ns.value}> ; entity: <{header.entity_ns.value}>\n"
        f"{body} ."
    )


# -- augmentation and evaluation --------------------------------------------------


def augment(e: TermExpr, links: dict[str, tuple[Iri, Iri]]) -> EntityExpr:
    """Replace every term leaf with its linked (class, entity) predicate."""
    if isinstance(e, TermLeaf):
        if e.term not in links:
            raise UnlinkedTermError(e.term)
        class_iri, entity_iri = links[e.term]
        return PredLeaf(class_iri=class_iri, entity_iri=entity_iri)
    if isinstance(e, PredLeaf):
        return e
    if isinstance(e, Not):
        return Not(augment(e.child, links))
    children = tuple(augment(c, links) for c in e.children)
    return type(e)(children)


def evaluate(e: EntityExpr, facts: set[tuple[str, str]]) -> bool:
    """Truth of the expression for one person's (class IRI, entity IRI) facts."""
    if isinstance(e, PredLeaf):
        return (e.class_iri.value, e.entity_iri.value) in facts
    if isinstance(e, TermLeaf):
        raise ExprInvariantError("cannot evaluate an unaugmented term leaf")
    if isinstance(e, Not):
        return not evaluate(e.child, facts)
    if isinstance(e, And):
        return all(evaluate(c, facts) for c in e.children)
    return any(evaluate(c, facts) for c in e.children)
