import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from audiencectl.boolexpr import (
    And,
    ExprInvariantError,
    ExprSyntaxError,
    Not,
    Or,
    PredLeaf,
    PrefixHeader,
    TermLeaf,
    UnlinkedTermError,
    augment,
    canonicalize,
    check_canonical,
    evaluate,
    leaves,
    parse_entity_expr,
    parse_term_expr,
    print_canonical,
    print_term_expr,
    skeleton,
)
from audiencectl.model import Iri
from conftest import ENT, ONT, EXAMPLE_LISTING, normalize_ws

HEADER = PrefixHeader(Iri(ONT), Iri(ENT))


def pred(class_name: str, entity: str) -> PredLeaf:
    return PredLeaf(Iri(ONT + class_name), Iri(ENT + entity))


EXAMPLE_TERM_TEXT = (
    '"maintenance technicians" AND "European sites" AND ("conveyor belts" OR "FA123")'
)

EXAMPLE_TERM_AST = And(
    (
        TermLeaf("maintenance technicians"),
        TermLeaf("European sites"),
        Or((TermLeaf("conveyor belts"), TermLeaf("FA123"))),
    )
)

EXAMPLE_ENTITY_AST = And(
    (
        pred("JobTitle", "MaintenanceTechnician"),
        pred("Region", "EU"),
        Or((pred("Equipment", "ConveyorBelt"), pred("EquipmentModel", "FA123"))),
    )
)

EXAMPLE_LINKS = {
    "maintenance technicians": (Iri(ONT + "JobTitle"), Iri(ENT + "MaintenanceTechnician")),
    "European sites": (Iri(ONT + "Region"), Iri(ENT + "EU")),
    "conveyor belts": (Iri(ONT + "Equipment"), Iri(ENT + "ConveyorBelt")),
    "FA123": (Iri(ONT + "EquipmentModel"), Iri(ENT + "FA123")),
}


# -- term grammar -----------------------------------------------------------------


def test_example_expression_parses_to_flat_ternary_and():
    expr = parse_term_expr(EXAMPLE_TERM_TEXT)
    assert expr == EXAMPLE_TERM_AST
    assert len(expr.children) == 3


def test_single_quoted_leaf():
    assert parse_term_expr('"x"') == TermLeaf("x")


def test_double_negation_eliminated():
    assert parse_term_expr('NOT NOT "x"') == TermLeaf("x")


def test_precedence_and_binds_tighter():
    expr = parse_term_expr('"a" AND "b" OR "c"')
    assert isinstance(expr, Or)
    assert expr.children[0] == And((TermLeaf("a"), TermLeaf("b")))


def test_nested_same_operator_flattened():
    expr = parse_term_expr('("a" AND "b") AND "c"')
    assert expr == And((TermLeaf("a"), TermLeaf("b"), TermLeaf("c")))


@pytest.mark.parametrize(
    "text",
    [
        "",
        '"unbalanced',
        '"a" AND',
        'AND "a"',
        '("a" OR "b"',
        '"a" "b"',
        '""',
        'NOT',
    ],
)
def test_term_syntax_errors(text):
    with pytest.raises(ExprSyntaxError):
        parse_term_expr(text)


# -- entity grammar ----------------------------------------------------------------


def test_example_listing_parses_to_expected_ast():
    header, expr = parse_entity_expr(EXAMPLE_LISTING)
    assert header == HEADER
    assert expr == EXAMPLE_ENTITY_AST


def test_single_predicate_document():
    text = f"class: <{ONT}> ; entity: <{ENT}>\nclass:Region ( entity:EU ) ."
    header, expr = parse_entity_expr(text)
    assert expr == pred("Region", "EU")
    assert print_canonical(expr, header).endswith("class:Region ( entity:EU ) .")


def test_missing_terminator_dot():
    text = f"class: <{ONT}> ; entity: <{ENT}>\nclass:Region ( entity:EU )"
    with pytest.raises(ExprSyntaxError, match="end with"):
        parse_entity_expr(text)


def test_unknown_prefix():
    text = f"class: <{ONT}> ; entity: <{ENT}>\nklass:Region ( entity:EU ) ."
    with pytest.raises(ExprSyntaxError, match="unknown prefix"):
        parse_entity_expr(text)


def test_swapped_prefixes_malformed():
    text = f"class: <{ONT}> ; entity: <{ENT}>\nentity:EU ( class:Region ) ."
    with pytest.raises(ExprSyntaxError, match="malformed predicate"):
        parse_entity_expr(text)


def test_missing_header():
    with pytest.raises(ExprSyntaxError, match="first line"):
        parse_entity_expr("class:Region ( entity:EU ) .")


def test_print_canonical_reproduces_listing_modulo_whitespace():
    out = print_canonical(EXAMPLE_ENTITY_AST, HEADER)
    assert normalize_ws(out) == normalize_ws(EXAMPLE_LISTING)


# -- canonical form -------------------------------------------------------------------


def test_canonicalize_flattens_and_dedups_negation():
    messy = And((And((TermLeaf("a"), TermLeaf("b"))), Not(Not(TermLeaf("c")))))
    canonical = canonicalize(messy)
    assert canonical == And((TermLeaf("a"), TermLeaf("b"), TermLeaf("c")))
    check_canonical(canonical)
    with pytest.raises(ExprInvariantError):
        check_canonical(messy)


def test_arity_invariants():
    with pytest.raises(ExprInvariantError):
        And((TermLeaf("a"),))
    with pytest.raises(ExprInvariantError):
        Or(())
    with pytest.raises(ExprInvariantError):
        TermLeaf("")


# -- augmentation -----------------------------------------------------------------------


def test_augment_example_expression():
    assert augment(EXAMPLE_TERM_AST, EXAMPLE_LINKS) == EXAMPLE_ENTITY_AST


def test_augment_preserves_structure():
    entity = augment(EXAMPLE_TERM_AST, EXAMPLE_LINKS)
    assert skeleton(entity) == skeleton(EXAMPLE_TERM_AST)
    assert len(leaves(entity)) == len(leaves(EXAMPLE_TERM_AST))


def test_augment_single_leaf():
    assert augment(TermLeaf("FA123"), EXAMPLE_LINKS) == pred("EquipmentModel", "FA123")


def test_augment_missing_link_names_term():
    with pytest.raises(UnlinkedTermError) as exc:
        augment(And((TermLeaf("FA123"), TermLeaf("ghost term"))), EXAMPLE_LINKS)
    assert exc.value.term == "ghost term"


# -- evaluation ---------------------------------------------------------------------------


def test_evaluate_example_expression():
    facts = {
        (ONT + "JobTitle", ENT + "MaintenanceTechnician"),
        (ONT + "Region", ENT + "EU"),
        (ONT + "EquipmentModel", ENT + "FA123"),
    }
    assert evaluate(EXAMPLE_ENTITY_AST, facts) is True
    assert evaluate(EXAMPLE_ENTITY_AST, facts - {(ONT + "Region", ENT + "EU")}) is False


def test_evaluate_not_over_empty_facts():
    assert evaluate(Not(pred("Region", "EU")), set()) is True


def test_evaluate_duplicate_conjunct_is_idempotent():
    duplicated = And((pred("Region", "EU"), pred("Region", "EU")))
    for facts in (set(), {(ONT + "Region", ENT + "EU")}):
        assert evaluate(duplicated, facts) == evaluate(pred("Region", "EU"), facts)


def test_evaluate_rejects_term_leaves():
    with pytest.raises(ExprInvariantError):
        evaluate(TermLeaf("x"), set())


# -- random round trips and properties -----------------------------------------------------


def random_term_expr(rng: random.Random, depth: int = 0):
    if depth >= 5 or rng.random() < 0.35:
        alphabet = "abcdefg XYZ123"
        term = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 10))).strip()
        return TermLeaf(term or "t")
    kind = rng.choice(["and", "or", "not"])
    if kind == "not":
        return Not(random_term_expr(rng, depth + 1))
    children = tuple(random_term_expr(rng, depth + 1) for _ in range(rng.randint(2, 3)))
    return And(children) if kind == "and" else Or(children)


def random_pred_expr(rng: random.Random, depth: int = 0):
    if depth >= 5 or rng.random() < 0.35:
        return pred(rng.choice(["JobTitle", "Region", "Equipment"]), f"E{rng.randint(0, 30)}")
    kind = rng.choice(["and", "or", "not"])
    if kind == "not":
        return Not(random_pred_expr(rng, depth + 1))
    children = tuple(random_pred_expr(rng, depth + 1) for _ in range(rng.randint(2, 3)))
    return And(children) if kind == "and" else Or(children)


def test_term_round_trip_300_random_asts():
    rng = random.Random(17)
    for _ in range(300):
        expr = canonicalize(random_term_expr(rng))
        assert parse_term_expr(print_term_expr(expr)) == expr


def test_entity_round_trip_300_random_asts():
    rng = random.Random(19)
    for _ in range(300):
        expr = canonicalize(random_pred_expr(rng))
        header, parsed = parse_entity_expr(print_canonical(expr, HEADER))
        assert (header, parsed) == (HEADER, expr)


def test_print_parse_print_fixpoint():
    rng = random.Random(29)
    for _ in range(200):
        expr = canonicalize(random_pred_expr(rng))
        once = print_canonical(expr, HEADER)
        again = print_canonical(parse_entity_expr(once)[1], HEADER)
        assert once == again


@st.composite
def entity_exprs(draw, depth=0):
    if depth >= 4 or draw(st.booleans()):
        class_name = draw(st.sampled_from(["JobTitle", "Region", "Equipment"]))
        entity = f"E{draw(st.integers(0, 9))}"
        return pred(class_name, entity)
    kind = draw(st.sampled_from(["and", "or", "not"]))
    if kind == "not":
        return Not(draw(entity_exprs(depth=depth + 1)))
    children = tuple(
        draw(entity_exprs(depth=depth + 1))
        for _ in range(draw(st.integers(2, 3)))
    )
    return And(children) if kind == "and" else Or(children)


@st.composite
def fact_sets(draw):
    pairs = st.tuples(
        st.sampled_from([ONT + c for c in ("JobTitle", "Region", "Equipment")]),
        st.sampled_from([ENT + f"E{i}" for i in range(10)]),
    )
    return draw(st.frozensets(pairs, max_size=12))


@given(st.lists(entity_exprs(), min_size=2, max_size=4), fact_sets())
@settings(max_examples=300, deadline=None)
def test_de_morgan(children, facts):
    conj = And(tuple(children))
    disj = Or(tuple(Not(c) for c in children))
    assert evaluate(Not(conj), set(facts)) == evaluate(disj, set(facts))


@given(entity_exprs(), fact_sets())
@settings(max_examples=300, deadline=None)
def test_canonicalization_preserves_semantics(expr, facts):
    assert evaluate(expr, set(facts)) == evaluate(canonicalize(expr), set(facts))
