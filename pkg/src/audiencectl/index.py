"""Full-text entity search kept in sync with the triple store via change events.

Only rdfs:label and rdf:type triples matter. An entity is searchable once it
has at least one label and a declared ontology class. Scoring is Dice overlap
of normalized token sets, with exact normalized-sequence matches pinned to 1.0.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .model import RDF_TYPE, RDFS_LABEL, ChangeEvent, Iri, Literal

if TYPE_CHECKING:
    from .store import EventBus, TripleStore

_SPLIT_RE = re.compile(r"[^a-z0-9]+")


class OrderingError(RuntimeError):
    """A change event arrived out of seq order."""


class InvalidQueryError(ValueError):
    """A query that is empty after normalization."""


def normalize(text: str) -> tuple[str, ...]:
    """Lowercase, split on non-alphanumerics, strip plural 's' from long tokens."""
    tokens = []
    for token in _SPLIT_RE.split(text.lower()):
        if not token:
            continue
        if len(token) >= 4 and token.endswith("s"):
            token = token[:-1]
        tokens.append(token)
    return tuple(tokens)


@dataclass(frozen=True)
class EntityRecord:
    iri: Iri
    class_iri: Iri
    primary_label: str
    alt_labels: tuple[str, ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return (self.primary_label, *self.alt_labels)


@dataclass(frozen=True)
class Match:
    entity: EntityRecord
    score: float
    matched_label: str


def _label_score(query_tokens: tuple[str, ...], label_tokens: tuple[str, ...]) -> float:
    if query_tokens == label_tokens:
        return 1.0
    qset, lset = set(query_tokens), set(label_tokens)
    if not qset or not lset:
        return 0.0
    dice = 2 * len(qset & lset) / (len(qset) + len(lset))
    # Same token set in a different order is near-exact but must stay below 1.0.
    return 0.99 if dice == 1.0 else dice


class EntityIndex:
    def __init__(
        self, declared_classes: set[str], bus: EventBus | None = None
    ) -> None:
        self._declared = set(declared_classes)
        self._lock = threading.Lock()
        self._labels: dict[str, set[str]] = {}
        self._types: dict[str, set[str]] = {}
        self._indexed_tokens: dict[str, frozenset[str]] = {}
        self._token_map: dict[str, set[str]] = {}
        self._last_seq = 0
        self._bus = bus
        if bus is not None:
            bus.subscribe(self.apply_change)

    # -- event consumption ----------------------------------------------------

    def apply_change(self, event: ChangeEvent) -> None:
        with self._lock:
            if event.seq != self._last_seq + 1:
                raise OrderingError(
                    f"event seq {event.seq} after {self._last_seq}; expected {self._last_seq + 1}"
                )
            self._last_seq = event.seq
            t = event.triple
            iri = t.subject.value
            if t.predicate.value == RDFS_LABEL and isinstance(t.object, Literal):
                bucket = self._labels.setdefault(iri, set())
                if event.op == "insert":
                    bucket.add(t.object.text)
                else:
                    bucket.discard(t.object.text)
            elif t.predicate.value == RDF_TYPE and isinstance(t.object, Iri):
                bucket = self._types.setdefault(iri, set())
                if event.op == "insert":
                    bucket.add(t.object.value)
                else:
                    bucket.discard(t.object.value)
            else:
                return
            self._reindex(iri)

    def barrier(self) -> None:
        """Wait until every event published before this call has been applied."""
        if self._bus is not None:
            self._bus.barrier()

    def rebuild(self, store: TripleStore) -> None:
        """Derive index state directly from the store's current triples."""
        with self._lock:
            self._labels.clear()
            self._types.clear()
            self._indexed_tokens.clear()
            self._token_map.clear()
            with store.read():
                for s, _, o in store.match(None, Iri(RDFS_LABEL), None):
                    if isinstance(s, Iri) and isinstance(o, Literal):
                        self._labels.setdefault(s.value, set()).add(o.text)
                for s, _, o in store.match(None, Iri(RDF_TYPE), None):
                    if isinstance(s, Iri) and isinstance(o, Iri):
                        self._types.setdefault(s.value, set()).add(o.value)
                self._last_seq = store.seq
            for iri in set(self._labels) | set(self._types):
                self._reindex(iri)

    def _class_of(self, iri: str) -> str | None:
        declared = sorted(self._types.get(iri, set()) & self._declared)
        return declared[0] if declared else None

    def _record(self, iri: str) -> EntityRecord | None:
        labels = self._labels.get(iri)
        class_iri = self._class_of(iri)
        if not labels or class_iri is None:
            return None
        ordered = sorted(labels)
        return EntityRecord(
            iri=Iri(iri),
            class_iri=Iri(class_iri),
            primary_label=ordered[0],
            alt_labels=tuple(ordered[1:]),
        )

    def _reindex(self, iri: str) -> None:
        record = self._record(iri)
        new_tokens: frozenset[str] = frozenset()
        if record is not None:
            new_tokens = frozenset(
                tok for label in record.labels for tok in normalize(label)
            )
        old_tokens = self._indexed_tokens.get(iri, frozenset())
        for tok in old_tokens - new_tokens:
            bucket = self._token_map.get(tok)
            if bucket is not None:
                bucket.discard(iri)
                if not bucket:
                    del self._token_map[tok]
        for tok in new_tokens - old_tokens:
            self._token_map.setdefault(tok, set()).add(iri)
        if new_tokens:
            self._indexed_tokens[iri] = new_tokens
        else:
            self._indexed_tokens.pop(iri, None)

    # -- search -----------------------------------------------------------------

    def search(
        self, query: str, k: int, class_iri: str | None = None
    ) -> list[Match]:
        if k <= 0:
            raise ValueError("k must be positive")
        query_tokens = normalize(query)
        if not query_tokens:
            raise InvalidQueryError(f"query is empty after normalization: {query!r}")
        with self._lock:
            candidates: set[str] = set()
            for tok in set(query_tokens):
                candidates |= self._token_map.get(tok, set())
            matches: list[Match] = []
            for iri in candidates:
                record = self._record(iri)
                if record is None:
                    continue
                if class_iri is not None and record.class_iri.value != class_iri:
                    continue
                best_score = 0.0
                best_label = record.primary_label
                for label in sorted(record.labels):
                    score = _label_score(query_tokens, normalize(label))
                    if score > best_score:
                        best_score, best_label = score, label
                if best_score > 0.0:
                    matches.append(Match(record, best_score, best_label))
            matches.sort(key=lambda m: (-m.score, m.entity.iri.value))
            return matches[:k]

    def records(self) -> list[EntityRecord]:
        """Every searchable record, sorted by IRI."""
        with self._lock:
            out = [self._record(iri) for iri in sorted(self._labels)]
            return [r for r in out if r is not None]

    def record_for(self, iri: str) -> EntityRecord | None:
        with self._lock:
            return self._record(iri)
