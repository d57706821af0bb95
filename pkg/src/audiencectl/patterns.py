"""Graph-pattern trees and their join-based evaluation.

The tree language is the compilation target for Boolean entity expressions:
basic graph patterns, AND-groups, UNION, NOT-EXISTS filters, and a single
DISTINCT projection at the root. Solutions follow standard BGP join
semantics over partial bindings.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from typing import Protocol

from .model import Iri, Literal, Term, term_key

_VAR_NAME_RE = re.compile(r"^\?(v[0-9]+|person)$")


class PatternError(ValueError):
    """A pattern tree violating the structural contract."""


@dataclass(frozen=True, order=True)
class Var:
    name: str  # includes the leading '?'


PatternTerm = Var | Iri | Literal


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm


@dataclass(frozen=True)
class Bgp:
    patterns: tuple[TriplePattern, ...]


@dataclass(frozen=True)
class Group:
    """Conjunction: natural join of children, NOT-EXISTS children as filters."""

    children: tuple[PatternNode, ...]


@dataclass(frozen=True)
class Union:
    children: tuple[PatternNode, ...]


@dataclass(frozen=True)
class NotExists:
    child: PatternNode


PatternNode = Bgp | Group | Union | NotExists


@dataclass(frozen=True)
class DistinctProject:
    variable: Var
    child: PatternNode


@dataclass(frozen=True)
class SolutionSet:
    """Distinct bindings of one variable, sorted for deterministic iteration."""

    variable: str
    values: tuple[Term, ...]

    def as_iris(self) -> list[str]:
        return [v.value for v in self.values if isinstance(v, Iri)]


class TripleSource(Protocol):
    """Anything that can enumerate triples matching an (s, p, o) template."""

    def match(
        self, s: Term | None, p: Term | None, o: Term | None
    ) -> Iterable[tuple[Term, Term, Term]]: ...


def variables_in(node: PatternNode) -> set[str]:
    out: set[str] = set()
    _collect_vars(node, out)
    return out


def _collect_vars(node: PatternNode, out: set[str]) -> None:
    if isinstance(node, Bgp):
        for tp in node.patterns:
            for pos in (tp.subject, tp.predicate, tp.object):
                if isinstance(pos, Var):
                    out.add(pos.name)
    elif isinstance(node, (Group, Union)):
        for child in node.children:
            _collect_vars(child, out)
    elif isinstance(node, NotExists):
        _collect_vars(node.child, out)


def validate(root: DistinctProject) -> None:
    """Enforce the structural contract: root projection, var naming, var scope."""
    if not isinstance(root, DistinctProject):
        raise PatternError("root must be a DistinctProject")
    names = variables_in(root.child) | {root.variable.name}
    for name in names:
        if not _VAR_NAME_RE.match(name):
            raise PatternError(f"bad variable name: {name!r}")
    if root.variable.name not in variables_in(root.child):
        raise PatternError(
            f"projected variable {root.variable.name} does not appear in the pattern"
        )
    _reject_nested_project(root.child)


def _reject_nested_project(node: object) -> None:
    if isinstance(node, DistinctProject):
        raise PatternError("DistinctProject allowed only at the root")
    if isinstance(node, (Group, Union)):
        for child in node.children:
            _reject_nested_project(child)
    elif isinstance(node, NotExists):
        _reject_nested_project(node.child)


Binding = dict[str, Term]


def _resolve(pos: PatternTerm, binding: Binding) -> Term | None:
    if isinstance(pos, Var):
        return binding.get(pos.name)
    return pos


def _match_pattern(
    tp: TriplePattern, binding: Binding, source: TripleSource
) -> Iterator[Binding]:
    s = _resolve(tp.subject, binding)
    p = _resolve(tp.predicate, binding)
    o = _resolve(tp.object, binding)
    for ts, tpred, to in source.match(s, p, o):
        extended = dict(binding)
        ok = True
        for pos, value in ((tp.subject, ts), (tp.predicate, tpred), (tp.object, to)):
            if not isinstance(pos, Var):
                continue
            bound = extended.get(pos.name)
            if bound is None:
                extended[pos.name] = value
            elif bound != value:
                ok = False
                break
        if ok:
            yield extended


def _binding_key(b: Binding) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((k, term_key(v)) for k, v in b.items()))


def _dedupe(bindings: Iterable[Binding]) -> list[Binding]:
    seen: set[tuple[tuple[str, str], ...]] = set()
    out: list[Binding] = []
    for b in bindings:
        key = _binding_key(b)
        if key not in seen:
            seen.add(key)
            out.append(b)
    return out


def _eval_node(
    node: PatternNode, bindings: list[Binding], source: TripleSource
) -> list[Binding]:
    if isinstance(node, Bgp):
        current = bindings
        for tp in node.patterns:
            current = [
                ext for b in current for ext in _match_pattern(tp, b, source)
            ]
        return current
    if isinstance(node, Group):
        current = bindings
        filters = []
        for child in node.children:
            if isinstance(child, NotExists):
                filters.append(child)
            else:
                current = _eval_node(child, current, source)
        for child in filters:
            current = _eval_node(child, current, source)
        return current
    if isinstance(node, Union):
        merged: list[Binding] = []
        for child in node.children:
            merged.extend(_eval_node(child, bindings, source))
        return _dedupe(merged)
    if isinstance(node, NotExists):
        return [
            b for b in bindings if not _eval_node(node.child, [b], source)
        ]
    raise PatternError(f"unknown pattern node: {node!r}")


def evaluate(root: DistinctProject, source: TripleSource) -> SolutionSet:
    """Evaluate the tree against a triple source and project the root variable."""
    validate(root)
    name = root.variable.name
    values: set[Term] = set()
    for binding in _eval_node(root.child, [{}], source):
        value = binding.get(name)
        if value is None:
            raise PatternError(f"projected variable {name} unbound in a solution")
        values.add(value)
    return SolutionSet(name, tuple(sorted(values, key=term_key)))
