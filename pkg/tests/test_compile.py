import random
from pathlib import Path

import pytest

from audiencectl.boolexpr import And, Not, Or, PredLeaf, PrefixHeader, parse_entity_expr
from audiencectl.compile import (
    JvqlError,
    LinkMeta,
    from_jvql,
    to_jvql,
    to_pattern_tree,
    to_sparql,
)
from audiencectl.mapping import MappingError
from audiencectl.model import Iri
from audiencectl.patterns import Union as PatternUnion
from audiencectl.patterns import Var, validate, variables_in
from conftest import ENT, ONT, EXAMPLE_LISTING

from test_boolexpr import random_pred_expr

GOLDEN = Path(__file__).parent / "golden" / "listing.sparql"
HEADER = PrefixHeader(Iri(ONT), Iri(ENT))
PERSON_CLASS = Iri(ONT + "Person")


def pred(class_name: str, entity: str) -> PredLeaf:
    return PredLeaf(Iri(ONT + class_name), Iri(ENT + entity))


def test_listing_sparql_matches_golden(mapping):
    _, expr = parse_entity_expr(EXAMPLE_LISTING)
    got = to_sparql(expr, mapping, HEADER)
    assert got + "\n" == GOLDEN.read_text()
    assert got.startswith("PREFIX ont: <http://info.rme.amazon.dev/ontology/>")
    assert "?person ont:hasJobTitle ent:MaintenanceTechnician ." in got
    assert got.count("UNION") == 1


def test_single_predicate_region(mapping):
    got = to_sparql(pred("Region", "EU"), mapping, HEADER)
    assert "?person a ont:Person ." in got
    assert "?person ont:worksAtSite ?v1 ." in got
    assert "?v1 ont:inRegion ent:EU ." in got


def test_not_compiles_to_filter_not_exists(mapping):
    got = to_sparql(Not(pred("Region", "EU")), mapping, HEADER)
    assert "FILTER NOT EXISTS {" in got
    assert got.index("FILTER NOT EXISTS") < got.index("?person ont:worksAtSite")


def test_sparql_is_deterministic(mapping):
    _, expr = parse_entity_expr(EXAMPLE_LISTING)
    assert to_sparql(expr, mapping, HEADER) == to_sparql(expr, mapping, HEADER)


def test_unmapped_class_rejected(mapping):
    ghost = PredLeaf(Iri(ONT + "Ghost"), Iri(ENT + "X"))
    with pytest.raises(MappingError):
        to_sparql(ghost, mapping, HEADER)
    with pytest.raises(MappingError):
        to_pattern_tree(ghost, mapping, PERSON_CLASS)


def test_variable_numbering_by_leaf_order(mapping):
    expr = And(
        (
            pred("Region", "EU"),  # path of 2 -> ?v1
            pred("JobTitle", "Manager"),  # path of 1 -> no var
            pred("Equipment", "ConveyorBelt"),  # path of 2 -> ?v2
        )
    )
    got = to_sparql(expr, mapping, HEADER)
    assert "?v1 ont:inRegion ent:EU" in got
    assert "?v2 ont:hasType ent:ConveyorBelt" in got
    assert "?v3" not in got


def test_variable_hygiene_random(mapping):
    rng = random.Random(31)
    classes = ["JobTitle", "Region", "Site", "Equipment", "EquipmentModel"]

    def rand_expr(depth=0):
        if depth >= 4 or rng.random() < 0.4:
            return pred(rng.choice(classes), f"E{rng.randint(0, 9)}")
        kind = rng.choice(["and", "or", "not"])
        if kind == "not":
            return Not(rand_expr(depth + 1))
        children = tuple(rand_expr(depth + 1) for _ in range(rng.randint(2, 3)))
        return And(children) if kind == "and" else Or(children)

    from audiencectl.boolexpr import canonicalize

    for _ in range(100):
        expr = canonicalize(rand_expr())
        tree = to_pattern_tree(expr, mapping, PERSON_CLASS)
        validate(tree)
        names = variables_in(tree.child)
        assert "?person" in names
        fresh = sorted(names - {"?person"}, key=lambda v: int(v[2:]))
        # fresh vars are ?v1..?vN with no gaps and no collision with ?person
        assert fresh == [f"?v{i}" for i in range(1, len(fresh) + 1)]


def test_pattern_tree_guard_first(mapping):
    tree = to_pattern_tree(pred("Site", "DUB4"), mapping, PERSON_CLASS)
    validate(tree)
    guard = tree.child.children[0]
    assert guard.patterns[0].object == PERSON_CLASS
    assert tree.variable == Var("?person")


def test_hierarchy_expansion_creates_union(mapping, store):
    tree_off = to_pattern_tree(pred("JobTitle", "Manager"), mapping, PERSON_CLASS)
    assert not isinstance(tree_off.child.children[1], PatternUnion)
    tree_on = to_pattern_tree(
        pred("JobTitle", "Manager"),
        mapping,
        PERSON_CLASS,
        expand_hierarchy=True,
        closure=store.hierarchy_closure,
    )
    branch = tree_on.child.children[1]
    assert isinstance(branch, PatternUnion)
    assert len(branch.children) == 2  # Manager + SeniorManager


def test_hierarchy_expansion_without_closure_fn_rejected(mapping):
    with pytest.raises(MappingError, match="closure"):
        to_pattern_tree(
            pred("JobTitle", "Manager"), mapping, PERSON_CLASS, expand_hierarchy=True
        )


# -- jVQL ---------------------------------------------------------------------------


def test_listing_jvql_structure():
    _, expr = parse_entity_expr(EXAMPLE_LISTING)
    doc = to_jvql(expr, {ENT + "EU": LinkMeta(label="EU", matched_term="European sites", link_score=1.0)})
    assert doc["version"] == "1"
    root = doc["root"]
    assert root["kind"] == "and"
    assert len(root["children"]) == 3
    assert root["children"][2]["kind"] == "or"
    kinds = [c["kind"] for c in root["children"][2]["children"]]
    assert kinds == ["predicate", "predicate"]
    eu = root["children"][1]
    assert eu["label"] == "EU"
    assert eu["matchedTerm"] == "European sites"
    assert eu["linkScore"] == 1.0


def test_single_predicate_jvql_root():
    doc = to_jvql(pred("Region", "EU"))
    assert doc["root"]["kind"] == "predicate"
    assert doc["root"]["label"] == "EU"  # falls back to the local name


def test_jvql_round_trip_300_random():
    rng = random.Random(37)
    from audiencectl.boolexpr import canonicalize

    for _ in range(300):
        expr = canonicalize(random_pred_expr(rng))
        assert from_jvql(to_jvql(expr)) == expr


def test_from_jvql_canonicalizes_user_edits():
    doc = {
        "version": "1",
        "root": {
            "kind": "and",
            "children": [
                {
                    "kind": "and",
                    "children": [
                        {"kind": "predicate", "classIri": ONT + "Region", "entityIri": ENT + "EU"},
                        {"kind": "predicate", "classIri": ONT + "Site", "entityIri": ENT + "DUB4"},
                    ],
                },
                {"kind": "predicate", "classIri": ONT + "JobTitle", "entityIri": ENT + "Manager"},
            ],
        },
    }
    expr = from_jvql(doc)
    assert expr == And(
        (pred("Region", "EU"), pred("Site", "DUB4"), pred("JobTitle", "Manager"))
    )


@pytest.mark.parametrize(
    "doc",
    [
        {"version": "2", "root": {"kind": "predicate"}},
        {"version": "1"},
        {"version": "1", "root": {"kind": "mystery"}},
        {"version": "1", "root": {"kind": "and", "children": []}},
        {
            "version": "1",
            "root": {
                "kind": "or",
                "children": [
                    {"kind": "predicate", "classIri": ONT + "Region", "entityIri": ENT + "EU"}
                ],
            },
        },
        {"version": "1", "root": {"kind": "not"}},
        {"version": "1", "root": {"kind": "predicate", "classIri": ONT + "Region"}},
        {"version": "1", "root": {"kind": "predicate", "classIri": "no scheme", "entityIri": ENT + "EU"}},
    ],
)
def test_from_jvql_rejects_malformed(doc):
    with pytest.raises(JvqlError):
        from_jvql(doc)
