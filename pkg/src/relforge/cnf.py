"""Grounding closed formulas into CNF over edge variables.

Edge ``i -> j`` of an n-node graph is DIMACS variable ``i * n + j + 1``;
variables above ``n * n`` are auxiliaries. Quantifiers are expanded over node
tuples in lexicographic order, equality atoms fold to constants, and the
resulting negation normal form is clausified. A conjunction that ends up
inside a disjunction gets a fully defined auxiliary (a <-> conjunction), so
every auxiliary is a function of the edge variables and each graph has
exactly one CNF model.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dsl import (
    And,
    EdgeAtom,
    EqAtom,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    NeqAtom,
    Not,
    Or,
    free_vars,
)
from .graph import MAX_NODES


class CnfError(ValueError):
    pass


@dataclass
class Cnf:
    num_vars: int
    clauses: list[tuple[int, ...]] = field(default_factory=list)
    # node count of the grounding; 0 for CNFs that did not come from ground()
    n: int = 0

    @property
    def num_edge_vars(self) -> int:
        return self.n * self.n

    def copy(self) -> Cnf:
        return Cnf(self.num_vars, list(self.clauses), self.n)

    def validate(self) -> None:
        for c in self.clauses:
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise CnfError(f"literal {lit} out of range in clause {c}")

    def satisfied_by(self, model: Sequence[bool]) -> bool:
        """``model[v - 1]`` is the value of variable v."""
        return all(any(model[abs(l) - 1] == (l > 0) for l in c) for c in self.clauses)

    def to_dimacs(self, comments: Iterable[str] = ()) -> str:
        lines = [f"c {c}" for c in comments]
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Cnf:
    num_vars = None
    declared = 0
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise CnfError(f"line {lineno}: bad problem line {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        if num_vars is None:
            raise CnfError(f"line {lineno}: clause before problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise CnfError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if num_vars is None:
        raise CnfError("missing 'p cnf' line")
    if declared != len(clauses):
        raise CnfError(f"problem line declares {declared} clauses, found {len(clauses)}")
    cnf = Cnf(num_vars, clauses)
    cnf.validate()
    return cnf


# --- propositional NNF -------------------------------------------------------
# Nodes: True / False, int (signed DIMACS literal), ("and", kids), ("or", kids)


def _mk(op: str, kids: Iterable[object]) -> object:
    absorbing = op == "or"  # True absorbs "or", False absorbs "and"
    out: list[object] = []
    lits: set[int] = set()
    for k in kids:
        if k is absorbing:
            return absorbing
        if k is (not absorbing):
            continue
        if isinstance(k, tuple) and k[0] == op:
            items = k[1]
        else:
            items = (k,)
        for item in items:
            if isinstance(item, int) and not isinstance(item, bool):
                if -item in lits:
                    return absorbing
                if item in lits:
                    continue
                lits.add(item)
            out.append(item)
    if not out:
        return not absorbing
    if len(out) == 1:
        return out[0]
    return (op, tuple(out))


class _Grounder:
    def __init__(self, n: int) -> None:
        self.n = n

    def node(self, f: Formula, env: dict[str, int], pos: bool) -> object:
        n = self.n
        match f:
            case EdgeAtom(u, v):
                var = env[u] * n + env[v] + 1
                return var if pos else -var
            case EqAtom(u, v):
                return (env[u] == env[v]) == pos
            case NeqAtom(u, v):
                return (env[u] != env[v]) == pos
            case Not(inner):
                return self.node(inner, env, not pos)
            case And(a, b):
                return _mk("and" if pos else "or", (self.node(a, env, pos), self.node(b, env, pos)))
            case Or(a, b):
                return _mk("or" if pos else "and", (self.node(a, env, pos), self.node(b, env, pos)))
            case Implies(a, b):
                return _mk("or" if pos else "and", (self.node(a, env, not pos), self.node(b, env, pos)))
            case Iff(a, b):
                if pos:
                    return _mk("and", (
                        _mk("or", (self.node(a, env, False), self.node(b, env, True))),
                        _mk("or", (self.node(a, env, True), self.node(b, env, False))),
                    ))
                return _mk("or", (
                    _mk("and", (self.node(a, env, True), self.node(b, env, False))),
                    _mk("and", (self.node(a, env, False), self.node(b, env, True))),
                ))
            case Forall(vs, body) | Exists(vs, body):
                universal = isinstance(f, Forall) == pos
                return _mk("and" if universal else "or", self._expand(vs, body, env, pos))
        raise TypeError(f"not a formula node: {f!r}")

    def _expand(self, vs: tuple[str, ...], body: Formula, env: dict[str, int], pos: bool) -> list:
        saved = {v: env[v] for v in vs if v in env}
        out = []
        try:
            for values in itertools.product(range(self.n), repeat=len(vs)):
                env.update(zip(vs, values))
                out.append(self.node(body, env, pos))
            return out
        finally:
            for v in vs:
                env.pop(v, None)
            env.update(saved)


class _Clausifier:
    def __init__(self, first_free: int) -> None:
        self.next_var = first_free
        self.clauses: list[tuple[int, ...]] = []
        self.seen: set[tuple[int, ...]] = set()

    def emit(self, lits: Iterable[int]) -> None:
        uniq = set(lits)
        if any(-l in uniq for l in uniq):
            return
        clause = tuple(sorted(uniq, key=lambda l: (abs(l), l < 0)))
        if clause not in self.seen:
            self.seen.add(clause)
            self.clauses.append(clause)

    def top(self, node: object) -> None:
        if node is True:
            return
        if node is False:
            self.emit(())
            return
        if isinstance(node, int):
            self.emit((node,))
        elif node[0] == "and":
            for kid in node[1]:
                self.top(kid)
        else:
            self.emit(self.literal(kid) for kid in node[1])

    def literal(self, node: object) -> int:
        """A literal equivalent to ``node``, defining an auxiliary if needed."""
        if isinstance(node, int):
            return node
        op, kids = node
        lits = [self.literal(k) for k in kids]
        aux = self.next_var
        self.next_var += 1
        if op == "and":
            for l in lits:
                self.emit((-aux, l))
            self.emit([aux] + [-l for l in lits])
        else:
            self.emit([-aux] + lits)
            for l in lits:
                self.emit((aux, -l))
        return aux


def ground(f: Formula, n: int) -> Cnf:
    """CNF whose models, projected on the first n*n variables, are the graphs satisfying ``f``."""
    if not 1 <= n <= MAX_NODES:
        raise CnfError(f"node count {n} outside [1, {MAX_NODES}]")
    unbound = free_vars(f)
    if unbound:
        raise CnfError(f"unbound variables {sorted(unbound)}")
    root = _Grounder(n).node(f, {}, True)
    cl = _Clausifier(n * n + 1)
    cl.top(root)
    return Cnf(cl.next_var - 1, cl.clauses, n)


def negate_and_ground(f: Formula, n: int) -> Cnf:
    return ground(Not(f), n)


def edge_var(n: int, i: int, j: int) -> int:
    return i * n + j + 1
