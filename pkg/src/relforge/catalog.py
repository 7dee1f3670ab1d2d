"""The sixteen built-in relational properties and their base sizes."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .dsl import Formula, conjoin, parse

CATEGORIES = ("basic", "function-related", "combined")


@dataclass(frozen=True)
class PropertyDef:
    name: str
    formula: Formula
    base_size: int
    category: str

    def __post_init__(self) -> None:
        if self.base_size < 1:
            raise ValueError(f"{self.name}: base size must be >= 1")
        if self.category not in CATEGORIES:
            raise ValueError(f"{self.name}: unknown category {self.category!r}")


# Component formulas. "symmetric" only appears inside equivalence.
COMPONENT_SOURCES = {
    "antisymmetry": "all u, v | (edge(u, v) and edge(v, u)) implies u = v",
    "connex": "all u, v | u != v implies (edge(u, v) or edge(v, u))",
    "reflexivity": "all u | edge(u, u)",
    "irreflexivity": "all u | not edge(u, u)",
    "transitivity": "all u, v, w | (edge(u, v) and edge(v, w)) implies edge(u, w)",
    "symmetric": "all u, v | edge(u, v) implies edge(v, u)",
    "has_successor": "all u | some v | edge(u, v)",
    "functionality": "all u, v, w | (edge(u, v) and edge(u, w)) implies v = w",
    "injectivity": "all u, v, w | (edge(u, w) and edge(v, w)) implies u = v",
    "surjectivity": "all v | some u | edge(u, v)",
}

# name -> (components, base size, category), in table order
_TABLE = (
    ("antisymmetry", ("antisymmetry",), 5, "basic"),
    ("connex", ("connex",), 6, "basic"),
    ("reflexivity", ("reflexivity",), 5, "basic"),
    ("irreflexivity", ("irreflexivity",), 5, "basic"),
    ("transitivity", ("transitivity",), 6, "basic"),
    ("function", ("has_successor", "functionality"), 8, "function-related"),
    ("functionality", ("functionality",), 8, "function-related"),
    ("injectivity", ("injectivity",), 8, "function-related"),
    ("surjectivity", ("surjectivity",), 14, "function-related"),
    ("bijectivity", ("has_successor", "functionality", "surjectivity", "injectivity"), 14, "function-related"),
    ("equivalence", ("reflexivity", "symmetric", "transitivity"), 20, "combined"),
    ("partial_order", ("reflexivity", "antisymmetry", "transitivity"), 6, "combined"),
    ("preorder", ("reflexivity", "transitivity"), 7, "combined"),
    ("strict_order", ("irreflexivity", "transitivity"), 7, "combined"),
    # same axioms as partial_order, different base size; kept as listed
    ("non_strict_order", ("reflexivity", "antisymmetry", "transitivity"), 7, "combined"),
    ("total_order", ("reflexivity", "antisymmetry", "transitivity", "connex"), 13, "combined"),
)

PROPERTY_NAMES = tuple(row[0] for row in _TABLE)
COMPONENTS = {row[0]: row[1] for row in _TABLE}


@lru_cache(maxsize=None)
def component(name: str) -> Formula:
    return parse(COMPONENT_SOURCES[name])


@lru_cache(maxsize=1)
def builtin_catalog() -> tuple[PropertyDef, ...]:
    return tuple(
        PropertyDef(name, conjoin(*(component(c) for c in parts)), base, cat)
        for name, parts, base, cat in _TABLE
    )


def get_property(name: str) -> PropertyDef:
    for p in builtin_catalog():
        if p.name == name:
            return p
    raise KeyError(f"unknown property {name!r}; known: {', '.join(PROPERTY_NAMES)}")


def load_property_file(path: str | Path, base_size: int, name: str | None = None) -> PropertyDef:
    """A user property: the file holds one formula, the name defaults to the stem."""
    path = Path(path)
    formula = parse(path.read_text(encoding="utf-8"))
    return PropertyDef(name or path.stem, formula, base_size, "combined")


def select_properties(selector: str) -> list[PropertyDef]:
    """``"all16"`` or a comma-separated list of catalog names."""
    if selector == "all16":
        return list(builtin_catalog())
    return [get_property(s.strip()) for s in selector.split(",") if s.strip()]
