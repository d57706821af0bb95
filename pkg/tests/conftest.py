from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from audiencectl.index import EntityIndex  # noqa: E402
from audiencectl.llm import ScriptedProvider  # noqa: E402
from audiencectl.mapping import Ontology, load_mapping  # noqa: E402
from audiencectl.orchestrator import Engine  # noqa: E402
from audiencectl.store import EventBus, TripleStore  # noqa: E402

KB_FILE = REPO / "fixtures" / "rme_kb.nt"
MAPPING_FILE = REPO / "config" / "mapping.json"
ONTOLOGY_FILE = REPO / "config" / "ontology.json"
LLM_FIXTURES = REPO / "fixtures" / "llm"

ONT = "http://info.rme.amazon.dev/ontology/"
ENT = "http://info.rme.amazon.dev/entity/"

EXAMPLE_STATEMENT = (
    "I want to reach out to all maintenance technicians working with "
    "Vendor X's conveyor belts or fire alarms of model FA123 at European sites"
)

# The reference formal expression for the example statement (line-wrapped as
# a display listing); comparisons normalize whitespace.
EXAMPLE_LISTING = (
    "class: <http://info.rme.amazon.dev/ontology/> ; "
    "entity: <http://info.rme.amazon.dev/entity/>\n"
    "class:JobTitle ( entity:MaintenanceTechnician ) AND class:Region ( entity:EU ) AND\n"
    "( class:Equipment ( entity:ConveyorBelt ) OR class:EquipmentModel ( entity:FA123 ) ) ."
)

EXAMPLE_AUDIENCE = {
    ENT + "alice-okafor",
    ENT + "bruno-keller",
    ENT + "carmen-ruiz",
    ENT + "daniela-rossi",
}


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


@pytest.fixture(scope="session")
def kb_text() -> str:
    return KB_FILE.read_text()


@pytest.fixture(scope="session")
def ontology() -> Ontology:
    return Ontology.from_file(ONTOLOGY_FILE)


@pytest.fixture(scope="session")
def mapping(ontology):
    return load_mapping(MAPPING_FILE, ontology)


@pytest.fixture()
def store(kb_text) -> TripleStore:
    s = TripleStore()
    s.load_triples(kb_text)
    return s


@pytest.fixture()
def synced_index(kb_text, ontology):
    bus = EventBus()
    store = TripleStore(bus=bus)
    index = EntityIndex(set(ontology.declared_classes), bus=bus)
    store.load_triples(kb_text)
    index.barrier()
    return store, index


@pytest.fixture(scope="session")
def provider() -> ScriptedProvider:
    return ScriptedProvider.from_dir(LLM_FIXTURES)


@pytest.fixture()
def engine(provider) -> Engine:
    return Engine.create(
        provider,
        kb_file=KB_FILE,
        mapping_file=MAPPING_FILE,
        ontology_file=ONTOLOGY_FILE,
    )
