"""Declarative binding of ontology classes to graph property paths.

The mapping decides how a class:entity predicate touches the graph: the
ordered property path walked from the audience person to the entity, plus an
optional narrower-property enabling hierarchy expansion for that class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .model import Iri

DEFAULT_CLASS_NS = "http://info.rme.amazon.dev/ontology/"
DEFAULT_ENTITY_NS = "http://info.rme.amazon.dev/entity/"


class MappingError(ValueError):
    """Invalid mapping or ontology configuration."""


@dataclass(frozen=True)
class Ontology:
    """Declared classes and properties the mapping is validated against."""

    entity_classes: frozenset[str]
    structural_classes: frozenset[str] = frozenset()
    properties: frozenset[str] = frozenset()

    @property
    def declared_classes(self) -> frozenset[str]:
        return self.entity_classes | self.structural_classes

    @classmethod
    def from_dict(cls, data: dict) -> Ontology:
        return cls(
            entity_classes=frozenset(data.get("entityClasses", ())),
            structural_classes=frozenset(data.get("structuralClasses", ())),
            properties=frozenset(data.get("properties", ())),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> Ontology:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ClassMapping:
    path: tuple[Iri, ...]
    hierarchy_property: Iri | None = None


@dataclass(frozen=True)
class PredicateMapping:
    classes: dict[str, ClassMapping] = field(default_factory=dict)

    def for_class(self, class_iri: str) -> ClassMapping:
        try:
            return self.classes[class_iri]
        except KeyError:
            raise MappingError(f"no mapping for class {class_iri}") from None


def load_mapping(config: dict | str | Path, ontology: Ontology) -> PredicateMapping:
    """Validate a mapping config against the declared ontology.

    Every declared entity class must be mapped; paths must be non-empty,
    duplicate-free, and use declared properties only.
    """
    if not isinstance(config, dict):
        config = json.loads(Path(config).read_text())
    entries = config.get("classes")
    if not isinstance(entries, dict):
        raise MappingError("mapping config needs a 'classes' object")

    classes: dict[str, ClassMapping] = {}
    for class_iri, entry in entries.items():
        if class_iri not in ontology.declared_classes:
            raise MappingError(f"mapped class is not declared: {class_iri}")
        path = entry.get("path", [])
        if not path:
            raise MappingError(f"empty path for class {class_iri}")
        if len(set(path)) != len(path):
            raise MappingError(f"cyclic path for class {class_iri}: {path}")
        for prop in path:
            if prop not in ontology.properties:
                raise MappingError(f"unknown property {prop} in path for {class_iri}")
        hierarchy = entry.get("hierarchyProperty")
        if hierarchy is not None and hierarchy not in ontology.properties:
            raise MappingError(f"unknown hierarchy property {hierarchy} for {class_iri}")
        classes[class_iri] = ClassMapping(
            path=tuple(Iri(p) for p in path),
            hierarchy_property=Iri(hierarchy) if hierarchy else None,
        )

    missing = sorted(ontology.entity_classes - classes.keys())
    if missing:
        raise MappingError(f"missing mapping for declared classes: {', '.join(missing)}")
    return PredicateMapping(classes=classes)
