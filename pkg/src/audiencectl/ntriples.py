"""Strict N-Triples subset: absolute IRIs, plain/language-tagged literals, comments.

No blank nodes, no typed literals. One statement per line, terminated by ` .`.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator

from .model import Iri, IriError, Literal, Term, Triple

_IRIREF = r"<([^<>\s]+)>"
_STRING = r'"((?:[^"\\\n]|\\.)*)"'
_LANG = r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)"

_LINE_RE = re.compile(
    rf"^\s*{_IRIREF}\s+{_IRIREF}\s+(?:{_IRIREF}|{_STRING}(?:{_LANG})?)\s*\.\s*$"
)

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}
_UNESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


class TripleSyntaxError(ValueError):
    """A malformed statement line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _unescape(raw: str, line_no: int) -> str:
    out: list[str] = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\":
            if i + 1 >= len(raw) or raw[i + 1] not in _ESCAPES:
                raise TripleSyntaxError(line_no, f"bad escape in literal: {raw!r}")
            out.append(_ESCAPES[raw[i + 1]])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _escape(text: str) -> str:
    return "".join(_UNESCAPES.get(c, c) for c in text)


def parse_lines(lines: Iterable[str]) -> Iterator[tuple[int, Triple]]:
    """Yield (line_no, triple) for every statement line; skip comments and blanks."""
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise TripleSyntaxError(line_no, f"not a valid statement: {stripped!r}")
        s_raw, p_raw, o_iri, o_lit, o_lang = m.groups()
        try:
            subject = Iri(s_raw)
            predicate = Iri(p_raw)
            obj: Term
            if o_iri is not None:
                obj = Iri(o_iri)
            else:
                obj = Literal(_unescape(o_lit, line_no), o_lang)
        except IriError as exc:
            raise TripleSyntaxError(line_no, str(exc)) from exc
        yield line_no, Triple(subject, predicate, obj)


def parse_document(text: str) -> list[Triple]:
    return [t for _, t in parse_lines(text.splitlines())]


def serialize_term(term: Term) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    lang = f"@{term.lang}" if term.lang else ""
    return f'"{_escape(term.text)}"{lang}'


def serialize_triple(t: Triple) -> str:
    return f"{serialize_term(t.subject)} {serialize_term(t.predicate)} {serialize_term(t.object)} ."
