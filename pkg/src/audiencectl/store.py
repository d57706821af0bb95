"""Embedded RDF triple store: ingestion, change events, pattern evaluation.

Concurrency: many readers, one writer (RWLock). Mutations emit ChangeEvents
onto an EventBus whose single consumer thread delivers them to subscribers in
seq order; evaluate() holds the read lock for its whole run, so queries see a
consistent snapshot.
"""

from __future__ import annotations

import queue
import threading
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field

from .model import ChangeEvent, Iri, Term, Triple, term_key
from .ntriples import parse_lines
from .patterns import DistinctProject, SolutionSet, evaluate


class _RWLock:
    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._readers = 0
        self._writing = False

    @contextmanager
    def read(self) -> Iterator[None]:
        with self._cond:
            while self._writing:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if self._readers == 0:
                    self._cond.notify_all()

    @contextmanager
    def write(self) -> Iterator[None]:
        with self._cond:
            while self._writing or self._readers:
                self._cond.wait()
            self._writing = True
        try:
            yield
        finally:
            with self._cond:
                self._writing = False
                self._cond.notify_all()


class EventBus:
    """Ordered fan-out of ChangeEvents on a single consumer thread."""

    def __init__(self) -> None:
        self._queue: queue.Queue = queue.Queue()
        self._subscribers: list[Callable[[ChangeEvent], None]] = []
        self.errors: list[Exception] = []
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def subscribe(self, handler: Callable[[ChangeEvent], None]) -> None:
        self._subscribers.append(handler)

    def publish(self, event: ChangeEvent) -> None:
        self._queue.put(event)

    def barrier(self) -> None:
        """Return only after every previously published event was delivered."""
        done = threading.Event()
        self._queue.put(done)
        done.wait()

    def _run(self) -> None:
        while True:
            item = self._queue.get()
            if isinstance(item, threading.Event):
                item.set()
                continue
            for handler in self._subscribers:
                try:
                    handler(item)
                except Exception as exc:  # keep delivering; surface via .errors
                    self.errors.append(exc)


@dataclass
class LoadReport:
    count: int
    events: list[ChangeEvent] = field(default_factory=list)


class TripleStore:
    def __init__(self, bus: EventBus | None = None) -> None:
        self._lock = _RWLock()
        self._triples: set[Triple] = set()
        self._by_s: dict[Term, set[Triple]] = {}
        self._by_p: dict[Term, set[Triple]] = {}
        self._by_o: dict[Term, set[Triple]] = {}
        self._seq = 0
        self.bus = bus

    # -- mutation -----------------------------------------------------------

    def load_triples(self, text: str) -> LoadReport:
        """Ingest an N-Triples subset document; duplicates are silent no-ops."""
        parsed = [t for _, t in parse_lines(text.splitlines())]
        events: list[ChangeEvent] = []
        with self._lock.write():
            for t in parsed:
                event = self._apply_locked("insert", t)
                if event is not None:
                    events.append(event)
        return LoadReport(count=len(events), events=events)

    def apply(self, op: str, t: Triple) -> ChangeEvent | None:
        if op not in ("insert", "delete"):
            raise ValueError(f"unknown op: {op!r}")
        with self._lock.write():
            return self._apply_locked(op, t)

    def insert(self, t: Triple) -> ChangeEvent | None:
        return self.apply("insert", t)

    def delete(self, t: Triple) -> ChangeEvent | None:
        return self.apply("delete", t)

    def _apply_locked(self, op: str, t: Triple) -> ChangeEvent | None:
        if op == "insert":
            if t in self._triples:
                return None
            self._triples.add(t)
            self._by_s.setdefault(t.subject, set()).add(t)
            self._by_p.setdefault(t.predicate, set()).add(t)
            self._by_o.setdefault(t.object, set()).add(t)
        else:
            if t not in self._triples:
                return None
            self._triples.remove(t)
            for index, key in (
                (self._by_s, t.subject),
                (self._by_p, t.predicate),
                (self._by_o, t.object),
            ):
                index[key].discard(t)
                if not index[key]:
                    del index[key]
        self._seq += 1
        event = ChangeEvent(seq=self._seq, op=op, triple=t)
        if self.bus is not None:
            self.bus.publish(event)
        return event

    # -- reads --------------------------------------------------------------

    @property
    def seq(self) -> int:
        return self._seq

    def __len__(self) -> int:
        return len(self._triples)

    @contextmanager
    def read(self) -> Iterator[None]:
        """Hold the read lock across several match()/objects() calls."""
        with self._lock.read():
            yield

    def snapshot(self) -> frozenset[Triple]:
        with self._lock.read():
            return frozenset(self._triples)

    def match(
        self, s: Term | None, p: Term | None, o: Term | None
    ) -> list[tuple[Term, Term, Term]]:
        """Triples matching the template; None positions are wildcards.

        Lock-free by design: call it under read() (evaluate and
        hierarchy_closure do so internally).
        """
        candidates: set[Triple] | None = None
        for index, key in ((self._by_s, s), (self._by_p, p), (self._by_o, o)):
            if key is None:
                continue
            found = index.get(key, set())
            candidates = found if candidates is None else candidates & found
            if not candidates:
                return []
        pool = self._triples if candidates is None else candidates
        return [(t.subject, t.predicate, t.object) for t in pool]

    def evaluate(self, root: DistinctProject) -> SolutionSet:
        with self._lock.read():
            return evaluate(root, self)

    def hierarchy_closure(self, root: Iri, narrower_property: Iri) -> set[Iri]:
        """root plus everything reaching it over narrower_property (descendants)."""
        with self._lock.read():
            closure: set[Iri] = {root}
            frontier = [root]
            while frontier:
                current = frontier.pop()
                for s, _, _ in self.match(None, narrower_property, current):
                    if isinstance(s, Iri) and s not in closure:
                        closure.add(s)
                        frontier.append(s)
            return closure

    def objects(self, subject: Iri, predicate: Iri) -> list[Term]:
        values = [o for _, _, o in self.match(subject, predicate, None)]
        return sorted(values, key=term_key)
