"""Deciding ``g |= f`` by expanding quantifiers over the node set.

:func:`check` is the reference semantics. :func:`compile_checker` turns a
formula into a Python predicate over adjacency masks; it is an optimisation
layer only and is differential-tested against :func:`check`.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Callable

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
from .graph import DirectedGraph

MAX_EXHAUSTIVE_N = 4


class BudgetError(RuntimeError):
    """A request exceeds a fixed work budget."""


def check(f: Formula, g: DirectedGraph) -> bool:
    unbound = free_vars(f)
    if unbound:
        raise ValueError(f"formula has free variables {sorted(unbound)}")
    return _eval(f, g.mask, g.n, {})


def check_mask(f: Formula, mask: int, n: int) -> bool:
    return _eval(f, mask, n, {})


def _eval(f: Formula, mask: int, n: int, env: dict[str, int]) -> bool:
    match f:
        case EdgeAtom(u, v):
            return bool(mask >> (env[u] * n + env[v]) & 1)
        case EqAtom(u, v):
            return env[u] == env[v]
        case NeqAtom(u, v):
            return env[u] != env[v]
        case Not(inner):
            return not _eval(inner, mask, n, env)
        case And(a, b):
            return _eval(a, mask, n, env) and _eval(b, mask, n, env)
        case Or(a, b):
            return _eval(a, mask, n, env) or _eval(b, mask, n, env)
        case Implies(a, b):
            return (not _eval(a, mask, n, env)) or _eval(b, mask, n, env)
        case Iff(a, b):
            return _eval(a, mask, n, env) == _eval(b, mask, n, env)
        case Forall(vs, body) | Exists(vs, body):
            want = isinstance(f, Exists)
            saved = {v: env[v] for v in vs if v in env}
            try:
                for values in itertools.product(range(n), repeat=len(vs)):
                    env.update(zip(vs, values))
                    if _eval(body, mask, n, env) == want:
                        return want
                return not want
            finally:
                for v in vs:
                    env.pop(v, None)
                env.update(saved)
    raise TypeError(f"not a formula node: {f!r}")


def count_satisfying(f: Formula, n: int) -> int:
    """Count the n-node graphs satisfying ``f`` by scanning all 2^(n*n)."""
    if n > MAX_EXHAUSTIVE_N:
        raise BudgetError(f"exhaustive scan limited to n <= {MAX_EXHAUSTIVE_N} (got n={n})")
    return sum(1 for mask in range(1 << (n * n)) if _eval(f, mask, n, {}))


# --- compiled predicates -----------------------------------------------------


def _py(f: Formula) -> str:
    match f:
        case EdgeAtom(u, v):
            return f"(m >> (_{u} * n + _{v}) & 1)"
        case EqAtom(u, v):
            return f"(_{u} == _{v})"
        case NeqAtom(u, v):
            return f"(_{u} != _{v})"
        case Not(inner):
            return f"(not {_py(inner)})"
        case And(a, b):
            return f"({_py(a)} and {_py(b)})"
        case Or(a, b):
            return f"({_py(a)} or {_py(b)})"
        case Implies(a, b):
            return f"((not {_py(a)}) or {_py(b)})"
        case Iff(a, b):
            return f"((not {_py(a)}) == (not {_py(b)}))"
        case Forall(vs, body) | Exists(vs, body):
            fn = "all" if isinstance(f, Forall) else "any"
            loops = " ".join(f"for _{v} in R" for v in vs)
            return f"{fn}({_py(body)} {loops})"
    raise TypeError(f"not a formula node: {f!r}")


@lru_cache(maxsize=256)
def compile_checker(f: Formula) -> Callable[[int, int], bool]:
    """Return ``pred(mask, n) -> bool`` equivalent to :func:`check`."""
    if free_vars(f):
        raise ValueError("formula has free variables")
    src = f"def pred(m, n):\n    R = range(n)\n    return bool({_py(f)})\n"
    namespace: dict[str, object] = {}
    exec(compile(src, "<relforge-checker>", "exec"), namespace)
    return namespace["pred"]  # type: ignore[return-value]
