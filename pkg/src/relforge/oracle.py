"""Brute-force ground truth for small graphs.

Everything here scans the whole graph space (n <= 4) or the whole
permutation group (n <= 8), so it shares no code path with the grounder or
the solver beyond the reference evaluator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .catalog import PropertyDef
from .cnf import Cnf, ground
from .dsl import Formula
from .evaluator import MAX_EXHAUSTIVE_N, BudgetError, check_mask, compile_checker
from .graph import DirectedGraph, mask_to_bitstring
from .sat import SolveConfig, enumerate_models

MAX_CANONICAL_N = 8


def _formula(prop: PropertyDef | Formula) -> Formula:
    return prop.formula if isinstance(prop, PropertyDef) else prop


def brute_masks(prop: PropertyDef | Formula, n: int) -> set[int]:
    if n > MAX_EXHAUSTIVE_N:
        raise BudgetError(f"brute-force enumeration limited to n <= {MAX_EXHAUSTIVE_N} (got n={n})")
    f = _formula(prop)
    return {m for m in range(1 << (n * n)) if check_mask(f, m, n)}


def brute_enumerate(prop: PropertyDef | Formula, n: int) -> set[DirectedGraph]:
    return {DirectedGraph(n, m) for m in brute_masks(prop, n)}


def canonical_form(g: DirectedGraph) -> str:
    """Lexicographically least bitstring over all node relabelings."""
    n = g.n
    if n > MAX_CANONICAL_N:
        raise BudgetError(f"canonical form limited to n <= {MAX_CANONICAL_N} (got n={n})")
    edges = list(g.edges())
    best = None
    for perm in itertools.permutations(range(n)):
        m = 0
        for i, j in edges:
            m |= 1 << (perm[i] * n + perm[j])
        s = mask_to_bitstring(m, n)
        if best is None or s < best:
            best = s
    return best  # type: ignore[return-value]


@dataclass
class DiffReport:
    name: str
    n: int
    brute_count: int
    solver_count: int
    compiled_count: int
    # graphs on which the routes disagree, as "<n>:<bits>" with the route that accepted them
    witnesses: list[tuple[str, str]] = field(default_factory=list)
    duplicate_models: int = 0

    @property
    def ok(self) -> bool:
        return not self.witnesses and not self.duplicate_models

    @property
    def positive_fraction(self) -> Fraction:
        return Fraction(self.brute_count, 1 << (self.n * self.n))

    def lines(self) -> list[str]:
        total = 1 << (self.n * self.n)
        out = [
            f"property={self.name} n={self.n}",
            f"brute={self.brute_count} solver={self.solver_count} compiled={self.compiled_count}",
            f"positive_fraction={self.brute_count}/{total} ({float(self.positive_fraction):.4g})",
            f"status={'agree' if self.ok else 'DISAGREE'}",
        ]
        if self.duplicate_models:
            out.append(f"duplicate_solver_models={self.duplicate_models}")
        out.extend(f"witness {route} {g}" for route, g in self.witnesses)
        return out


def differential_test(prop: PropertyDef | Formula, n: int, cnf: Cnf | None = None,
                      name: str | None = None, max_witnesses: int = 10) -> DiffReport:
    """Compare brute force, solver enumeration and the compiled checker.

    ``cnf`` overrides the grounding under test (used for fault injection).
    """
    f = _formula(prop)
    label = name or (prop.name if isinstance(prop, PropertyDef) else "<formula>")
    brute = brute_masks(f, n)
    if cnf is None:
        cnf = ground(f, n)
    found = enumerate_models(cnf, n * n, SolveConfig(mode="enumerate_all")).models
    solver = set(found)
    pred = compile_checker(f)
    compiled = {m for m in range(1 << (n * n)) if pred(m, n)}
    report = DiffReport(label, n, len(brute), len(solver), len(compiled),
                        duplicate_models=len(found) - len(solver))
    for route, other in (("solver-only", solver - brute), ("brute-only", brute - solver),
                         ("compiled-only", compiled - brute), ("brute-not-compiled", brute - compiled)):
        for m in sorted(other)[:max_witnesses]:
            report.witnesses.append((route, f"{n}:{mask_to_bitstring(m, n)}"))
    return report


# --- closed-form labelled counts ----------------------------------------------


def _bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def closed_form_count(name: str, n: int) -> int | None:
    """Number of labelled n-node graphs with the property, where a closed form exists."""
    pairs = n * (n - 1) // 2
    forms = {
        "reflexivity": lambda: 2 ** (n * n - n),
        "irreflexivity": lambda: 2 ** (n * n - n),
        "antisymmetry": lambda: 3**pairs * 2**n,
        "connex": lambda: 3**pairs * 2**n,
        "function": lambda: n**n,
        "functionality": lambda: (n + 1) ** n,
        "injectivity": lambda: (n + 1) ** n,
        "surjectivity": lambda: (2**n - 1) ** n,
        "bijectivity": lambda: math.factorial(n),
        "equivalence": lambda: _bell(n),
        "total_order": lambda: math.factorial(n),
    }
    fn = forms.get(name)
    return fn() if fn else None


def closed_form_expression(name: str) -> str | None:
    return {
        "reflexivity": "2^(n^2-n)",
        "irreflexivity": "2^(n^2-n)",
        "antisymmetry": "3^(n(n-1)/2) * 2^n",
        "connex": "3^(n(n-1)/2) * 2^n",
        "function": "n^n",
        "functionality": "(n+1)^n",
        "injectivity": "(n+1)^n",
        "surjectivity": "(2^n-1)^n",
        "bijectivity": "n!",
        "equivalence": "Bell(n)",
        "total_order": "n!",
    }.get(name)
