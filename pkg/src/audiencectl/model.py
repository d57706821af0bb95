"""Core knowledge-base atoms: IRIs, literals, triples, and change events."""

from __future__ import annotations

import re
from dataclasses import dataclass

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"


class IriError(ValueError):
    """Raised for text that is not an absolute IRI."""


@dataclass(frozen=True, order=True)
class Iri:
    """An absolute IRI. Value objects compare and sort by text."""

    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise IriError("IRI must be non-empty")
        if any(c.isspace() for c in self.value):
            raise IriError(f"IRI contains whitespace: {self.value!r}")
        if not _SCHEME_RE.match(self.value):
            raise IriError(f"IRI is not absolute (missing scheme): {self.value!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Literal:
    """A plain or language-tagged string literal."""

    text: str
    lang: str | None = None


Term = Iri | Literal


@dataclass(frozen=True, order=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term


@dataclass(frozen=True)
class ChangeEvent:
    """One store mutation; seq is strictly increasing per store."""

    seq: int
    op: str  # "insert" | "delete"
    triple: Triple


def term_key(term: Term) -> str:
    """Stable sort key covering both IRIs and literals."""
    if isinstance(term, Iri):
        return "i:" + term.value
    return f"l:{term.text}@{term.lang or ''}"
