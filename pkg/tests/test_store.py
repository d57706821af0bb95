import random
import threading

import pytest

from audiencectl.model import Iri, Literal, Triple
from audiencectl.store import EventBus, TripleStore
from conftest import ENT, KB_FILE, ONT

from oracle import random_kb


def _t(s, p, o):
    return Triple(Iri(ENT + s), Iri(ONT + p), Iri(ENT + o))


def fixture_statement_count() -> int:
    # Independent oracle: count content lines that are not comments.
    lines = KB_FILE.read_text().splitlines()
    return sum(1 for line in lines if line.strip() and not line.strip().startswith("#"))


def test_load_count_matches_file_line_count(kb_text):
    store = TripleStore()
    report = store.load_triples(kb_text)
    expected = fixture_statement_count()
    assert report.count == expected
    assert len(report.events) == expected
    assert all(e.op == "insert" for e in report.events)


def test_load_is_idempotent(kb_text, store):
    report = store.load_triples(kb_text)
    assert report.count == 0
    assert report.events == []


def test_empty_document_loads_nothing():
    store = TripleStore()
    report = store.load_triples("")
    assert report.count == 0 and report.events == []


def test_insert_existing_is_noop():
    store = TripleStore()
    assert store.insert(_t("a", "p", "b")) is not None
    assert store.insert(_t("a", "p", "b")) is None
    assert store.seq == 1


def test_delete_absent_is_noop():
    store = TripleStore()
    assert store.delete(_t("a", "p", "b")) is None
    assert store.seq == 0


def test_insert_then_delete_restores_state():
    store = TripleStore()
    before = store.snapshot()
    e1 = store.insert(_t("a", "p", "b"))
    e2 = store.delete(_t("a", "p", "b"))
    assert (e1.seq, e2.seq) == (1, 2)
    assert store.snapshot() == before


def test_unknown_op_rejected():
    store = TripleStore()
    with pytest.raises(ValueError):
        store.apply("upsert", _t("a", "p", "b"))


def test_replay_reproduces_store():
    rng = random.Random(11)
    store = TripleStore()
    events = []
    pool = sorted(random_kb(rng, 80), key=str)
    for _ in range(300):
        t = rng.choice(pool)
        op = rng.choice(["insert", "insert", "delete"])
        event = store.apply(op, t)
        if event is not None:
            events.append(event)
    assert [e.seq for e in events] == list(range(1, len(events) + 1))

    replayed = TripleStore()
    for event in events:
        replayed.apply(event.op, event.triple)
    assert replayed.snapshot() == store.snapshot()


def test_match_wildcards(store):
    alice = Iri(ENT + "alice-okafor")
    rows = store.match(alice, None, None)
    assert {r[0] for r in rows} == {alice}
    assert len(store.match(None, None, None)) == len(store)
    assert store.match(Iri(ENT + "nobody"), None, None) == []


def test_objects_sorted(store):
    labels = store.objects(Iri(ENT + "EU"), Iri("http://www.w3.org/2000/01/rdf-schema#label"))
    assert labels == sorted(labels, key=lambda o: o.text)
    assert Literal("Europe") in labels


# -- hierarchy closure ----------------------------------------------------------


def test_hierarchy_closure_manager(store):
    closure = store.hierarchy_closure(Iri(ENT + "Manager"), Iri(ONT + "subTitleOf"))
    assert closure == {Iri(ENT + "Manager"), Iri(ENT + "SeniorManager")}


def test_hierarchy_closure_leaf_is_singleton(store):
    closure = store.hierarchy_closure(
        Iri(ENT + "MaintenanceTechnician"), Iri(ONT + "subTitleOf")
    )
    assert closure == {Iri(ENT + "MaintenanceTechnician")}


def test_hierarchy_closure_terminates_on_cycle():
    store = TripleStore()
    store.insert(_t("a", "narrower", "b"))
    store.insert(_t("b", "narrower", "a"))
    closure = store.hierarchy_closure(Iri(ENT + "a"), Iri(ONT + "narrower"))
    assert closure == {Iri(ENT + "a"), Iri(ENT + "b")}


def test_hierarchy_closure_is_closed(store):
    prop = Iri(ONT + "subTitleOf")
    closure = store.hierarchy_closure(Iri(ENT + "Manager"), prop)
    again = set()
    for member in closure:
        again |= store.hierarchy_closure(member, prop)
    assert again == closure


# -- events and concurrency -------------------------------------------------------


def test_events_delivered_in_seq_order():
    bus = EventBus()
    seen = []
    bus.subscribe(lambda e: seen.append(e.seq))
    store = TripleStore(bus=bus)
    for i in range(50):
        store.insert(_t(f"s{i}", "p", "o"))
    bus.barrier()
    assert seen == list(range(1, 51))
    assert bus.errors == []


def test_barrier_on_idle_bus_returns():
    bus = EventBus()
    bus.barrier()
    bus.barrier()


def test_single_writer_many_readers(kb_text):
    store = TripleStore()
    store.load_triples(kb_text)
    errors = []

    def reader():
        try:
            for _ in range(200):
                with store.read():
                    store.match(None, Iri(ONT + "hasJobTitle"), None)
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    def writer():
        try:
            for i in range(200):
                t = _t(f"w{i}", "p", "o")
                store.insert(t)
                store.delete(t)
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=reader) for _ in range(4)]
    threads.append(threading.Thread(target=writer))
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
