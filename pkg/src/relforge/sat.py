"""Embedded CDCL SAT engine: solving, projected model enumeration, sampling.

Literals are stored internally as ``2 * var + sign`` (sign 1 = negated) so the
complement is ``lit ^ 1`` and both polarities index flat lists. Propagation
uses two watched literals; conflicts are analysed to the first UIP.

Enumeration and sampling both block every emitted projection. Decisions on
projection variables always come before decisions on auxiliaries, so the
negated projection decisions form a valid blocking clause: unit propagation
from those decisions alone fixes every projection variable.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .cnf import Cnf
from .seeds import derive_seed

DEFAULT_CONFLICT_BUDGET = 10**7
SAMPLER_ID = "randomized-cdcl"

MODES = ("first", "enumerate_all", "sample")


class SolverBudgetError(RuntimeError):
    """The conflict budget ran out before an answer was found."""


@dataclass(frozen=True)
class SolveConfig:
    seed: int = 0
    mode: str = "first"
    max_models: int | None = None
    symmetry_breaking: bool = False
    randomize: bool = False
    conflict_budget: int = DEFAULT_CONFLICT_BUDGET

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_models is not None and self.max_models < 1:
            raise ValueError("max_models must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class ModelSet:
    """Projected models (bit k of each int = projection variable k + 1)."""

    models: list[int]
    exhausted: bool
    conflicts: int = 0


def _luby(x: int) -> int:
    """Luby restart sequence 1, 1, 2, 1, 1, 2, 4, ... for x = 0, 1, 2, ..."""
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x %= size
    return 1 << seq


class Solver:
    """A single-threaded CDCL solver over a fixed variable set."""

    def __init__(self, num_vars: int, clauses: Iterable[Sequence[int]] = (), *,
                 project_vars: int | None = None,
                 conflict_budget: int = DEFAULT_CONFLICT_BUDGET) -> None:
        V = num_vars
        self.num_vars = V
        self.project_vars = V if project_vars is None else project_vars
        self.val = [0] * (2 * V + 2)
        self.level = [0] * (V + 1)
        self.reason: list[list[int] | None] = [None] * (V + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.watches: list[list[list[int]]] = [[] for _ in range(2 * V + 2)]
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []
        self.max_learnts = 2000.0
        self.seen = [False] * (V + 1)
        self.activity = [0.0] * (V + 1)
        self.var_inc = 1.0
        self.phase = [False] * (V + 1)
        # decision tier: projection variables are always branched on first
        self.tier = [0] * (V + 1)
        for v in range(self.project_vars + 1, V + 1):
            self.tier[v] = 1
        self.heap: list[tuple[int, float, int]] = []
        self.static_order = False
        # live blocking clauses, and per decision level the stack height when
        # that decision was made (for subsumption-based clean-up)
        self.block_stack: list[list[int]] = []
        self.dec_mark: list[int] = []
        self.conflicts = 0
        self.conflict_budget = conflict_budget
        self.ok = True
        for c in clauses:
            self.add_clause(c)
        self._rebuild_heap()

    # --- clause database -----------------------------------------------------

    def add_clause(self, dimacs_lits: Iterable[int]) -> None:
        """Add a clause at decision level 0."""
        if not self.ok:
            return
        self.cancel_until(0)
        val = self.val
        lits: list[int] = []
        seen: set[int] = set()
        for x in dimacs_lits:
            if x == 0 or abs(x) > self.num_vars:
                raise ValueError(f"literal {x} out of range")
            lit = 2 * abs(x) + (x < 0)
            if lit ^ 1 in seen:
                return
            if lit in seen:
                continue
            seen.add(lit)
            if val[lit] == 1:
                return
            if val[lit] == 0:
                lits.append(lit)
        if not lits:
            self.ok = False
        elif len(lits) == 1:
            self._enqueue(lits[0], None)
            if self.propagate() is not None:
                self.ok = False
        else:
            self.clauses.append(lits)
            self.watches[lits[0]].append(lits)
            self.watches[lits[1]].append(lits)

    def _attach(self, c: list[int]) -> None:
        self.watches[c[0]].append(c)
        self.watches[c[1]].append(c)

    def _reduce_db(self) -> None:
        locked = {id(self.reason[lit >> 1]) for lit in self.trail if self.reason[lit >> 1] is not None}
        self.learnts.sort(key=len)
        keep = len(self.learnts) // 2
        kept, dropped = [], set()
        for i, c in enumerate(self.learnts):
            if i < keep or len(c) <= 2 or id(c) in locked:
                kept.append(c)
            else:
                dropped.add(id(c))
        if dropped:
            self.learnts = kept
            for ws in self.watches:
                if ws:
                    ws[:] = [c for c in ws if id(c) not in dropped]

    # --- assignment ----------------------------------------------------------

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason: list[int] | None) -> None:
        v = lit >> 1
        self.val[lit] = 1
        self.val[lit ^ 1] = -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        val, reason, phase, trail = self.val, self.reason, self.phase, self.trail
        heap, tier, activity = self.heap, self.tier, self.activity
        lim = self.trail_lim[lvl]
        for idx in range(len(trail) - 1, lim - 1, -1):
            lit = trail[idx]
            v = lit >> 1
            val[lit] = 0
            val[lit ^ 1] = 0
            reason[v] = None
            phase[v] = not (lit & 1)
            heapq.heappush(heap, (tier[v], -activity[v], v))
        del trail[lim:]
        del self.trail_lim[lvl:]
        del self.dec_mark[lvl:]
        self.qhead = lim
        if len(heap) > 4 * self.num_vars + 64:
            self._rebuild_heap()

    def _rebuild_heap(self) -> None:
        val, tier, activity = self.val, self.tier, self.activity
        self.heap = [(tier[v], -activity[v], v) for v in range(1, self.num_vars + 1) if val[2 * v] == 0]
        heapq.heapify(self.heap)

    def _pick_branch_lit(self) -> int:
        heap, val, activity = self.heap, self.val, self.activity
        while heap:
            _, neg_act, v = heapq.heappop(heap)
            if val[2 * v] == 0 and -neg_act == activity[v]:
                return 2 * v + (0 if self.phase[v] else 1)
        # the lazy heap may have lost entries through stale keys; sweep once
        for v in range(1, self.num_vars + 1):
            if val[2 * v] == 0:
                self._rebuild_heap()
                return self._pick_branch_lit()
        return -1

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for i in range(1, self.num_vars + 1):
                act[i] *= 1e-100
            self.var_inc *= 1e-100
            self._rebuild_heap()
        elif self.val[2 * v] == 0:
            heapq.heappush(self.heap, (self.tier[v], -act[v], v))

    # --- propagation and analysis ------------------------------------------

    def propagate(self) -> list[int] | None:
        """Unit propagation; returns a conflicting clause or None."""
        val, watches, trail = self.val, self.watches, self.trail
        level, reason = self.level, self.reason
        lvl = len(self.trail_lim)
        while self.qhead < len(trail):
            false_lit = trail[self.qhead] ^ 1
            self.qhead += 1
            ws = watches[false_lit]
            i = j = 0
            end = len(ws)
            while i < end:
                c = ws[i]
                i += 1
                first = c[0]
                if first == false_lit:
                    first = c[1]
                    c[0] = first
                    c[1] = false_lit
                if val[first] == 1:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != -1:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if val[first] == -1:
                        ws[j:] = ws[i:end]
                        self.qhead = len(trail)
                        return c
                    val[first] = 1
                    val[first ^ 1] = -1
                    v = first >> 1
                    level[v] = lvl
                    reason[v] = c
                    trail.append(first)
            del ws[j:]
        return None

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        seen, level, reason, trail = self.seen, self.level, self.reason, self.trail
        lvl = len(self.trail_lim)
        learnt = [0]
        path = 0
        idx = len(trail) - 1
        p = -1
        clause: Sequence[int] = confl
        while True:
            start = 0 if p == -1 else 1
            for k in range(start, len(clause)):
                q = clause[k]
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    if not self.static_order:
                        self._bump(v)
                    if level[v] >= lvl:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            v = p >> 1
            seen[v] = False
            path -= 1
            if path == 0:
                break
            clause = reason[v]  # type: ignore[assignment]
        learnt[0] = p ^ 1
        # drop literals implied by the rest of the clause (local minimisation)
        out = [learnt[0]]
        for q in learnt[1:]:
            r = reason[q >> 1]
            if r is None or not all(seen[x >> 1] or level[x >> 1] == 0 for x in r[1:]):
                out.append(q)
        for q in learnt[1:]:
            seen[q >> 1] = False
        bt = 0
        if len(out) > 1:
            best = 1
            for k in range(2, len(out)):
                if level[out[k] >> 1] > level[out[best] >> 1]:
                    best = k
            out[1], out[best] = out[best], out[1]
            bt = level[out[1] >> 1]
        self.var_inc *= 1.0526  # activity decay 0.95
        return out, bt

    def _learn(self, learnt: list[int], bt: int) -> None:
        self.cancel_until(bt)
        if len(learnt) == 1:
            self._enqueue(learnt[0], None)
        else:
            self.learnts.append(learnt)
            self._attach(learnt)
            self._enqueue(learnt[0], learnt)

    def _on_conflict(self) -> None:
        self.conflicts += 1
        if self.conflicts > self.conflict_budget:
            raise SolverBudgetError(f"conflict budget of {self.conflict_budget} exhausted")

    # --- search --------------------------------------------------------------

    def _search(self, limit: int | None) -> bool | None:
        local = 0
        while True:
            confl = self.propagate()
            if confl is not None:
                self._on_conflict()
                local += 1
                if not self.trail_lim:
                    self.ok = False
                    return False
                learnt, bt = self._analyze(confl)
                self._learn(learnt, bt)
                continue
            if limit is not None and local >= limit:
                self.cancel_until(0)
                return None
            if len(self.learnts) - len(self.trail) >= self.max_learnts:
                self._reduce_db()
                self.max_learnts *= 1.1
            lit = self._pick_branch_lit()
            if lit < 0:
                return True
            self.trail_lim.append(len(self.trail))
            self.dec_mark.append(len(self.block_stack))
            self._enqueue(lit, None)

    def solve(self, restarts: bool = True) -> bool:
        if not self.ok:
            return False
        self.cancel_until(0)
        if self.propagate() is not None:
            self.ok = False
            return False
        i = 0
        while True:
            res = self._search(100 * _luby(i) if restarts else None)
            if res is not None:
                return res
            i += 1

    def model(self) -> list[bool]:
        val = self.val
        return [val[2 * v] == 1 for v in range(1, self.num_vars + 1)]

    def projection_mask(self) -> int:
        val = self.val
        mask = 0
        for v in range(self.project_vars, 0, -1):
            mask = (mask << 1) | (val[2 * v] == 1)
        return mask

    def _projection_decisions(self) -> list[int]:
        """Negated decision literals on projection variables, deepest first."""
        trail, pv = self.trail, self.project_vars
        out = []
        for lim in reversed(self.trail_lim):
            d = trail[lim]
            if d >> 1 <= pv:
                out.append(d ^ 1)
        return out

    def block_current(self) -> bool:
        """Block the current projection and jump to the asserting level.

        Returns False when no further models remain.
        """
        clause = self._projection_decisions()
        if clause:
            # every blocking clause made since the deepest projection decision
            # extends this one's decision prefix, so it is subsumed
            deepest = self.level[clause[0] >> 1]
            mark = self.dec_mark[deepest - 1]
            for old in self.block_stack[mark:]:
                self.watches[old[0]].remove(old)
                self.watches[old[1]].remove(old)
            del self.block_stack[mark:]
        if not clause:
            self.cancel_until(0)
            self.ok = False
            return False
        if len(clause) == 1:
            self.cancel_until(0)
            self._enqueue(clause[0], None)
            return True
        bt = self.level[clause[1] >> 1]
        self.cancel_until(bt)
        self.block_stack.append(clause)
        self._attach(clause)
        self._enqueue(clause[0], clause)
        return True

    def randomize(self, rng: random.Random) -> None:
        self.cancel_until(0)
        for v in range(1, self.num_vars + 1):
            self.activity[v] = rng.random()
            self.phase[v] = rng.random() < 0.5
        self.var_inc = 1.0
        self._rebuild_heap()

    def enumerate_projections(self, max_models: int | None = None) -> ModelSet:
        """All distinct projections, in a fixed variable order, without restarts."""
        self.static_order = True
        for v in range(1, self.num_vars + 1):
            self.activity[v] = 0.0
            self.phase[v] = False
        self.cancel_until(0)
        self._rebuild_heap()
        models: list[int] = []
        if not self.ok or self.propagate() is not None:
            self.ok = False
            return ModelSet(models, True, self.conflicts)
        while True:
            res = self._search(None)
            if not res:
                return ModelSet(models, True, self.conflicts)
            models.append(self.projection_mask())
            more = self.block_current()
            if not more:
                return ModelSet(models, True, self.conflicts)
            if max_models is not None and len(models) >= max_models:
                return ModelSet(models, False, self.conflicts)


# --- module-level API ----------------------------------------------------------


def _solver_for(cnf: Cnf, project_vars: int | None, cfg: SolveConfig) -> Solver:
    if cfg.symmetry_breaking:
        if not cnf.n:
            raise ValueError("symmetry breaking needs a grounded CNF (n unknown)")
        cnf = add_symmetry_breaking(cnf, cnf.n)
    return Solver(cnf.num_vars, cnf.clauses, project_vars=project_vars,
                  conflict_budget=cfg.conflict_budget)


def solve(cnf: Cnf, cfg: SolveConfig = SolveConfig()) -> list[bool] | None:
    """One model (``model[v - 1]`` is variable v) or None when unsatisfiable."""
    s = _solver_for(cnf, None, cfg)
    if cfg.randomize:
        s.randomize(random.Random(cfg.seed))
    return s.model() if s.solve() else None


def enumerate_models(cnf: Cnf, project_vars: int, cfg: SolveConfig = SolveConfig(mode="enumerate_all")) -> ModelSet:
    if cfg.mode != "enumerate_all":
        raise ValueError("enumerate_models needs mode='enumerate_all'")
    if not 0 <= project_vars <= cnf.num_vars:
        raise ValueError("project_vars out of range")
    return _solver_for(cnf, project_vars, cfg).enumerate_projections(cfg.max_models)


def sample(cnf: Cnf, project_vars: int, count: int, seed: int, *,
           symmetry_breaking: bool = False,
           conflict_budget: int = DEFAULT_CONFLICT_BUDGET) -> ModelSet:
    """Up to ``count`` distinct projections from independently seeded solves.

    Attempt i randomises branching order and polarity from
    ``derive_seed(seed, i)``. A projection is blocked only once it has been
    drawn twice, which keeps the clause database small when repeats are rare;
    since blocked projections are always already emitted, an unsatisfiable
    attempt still means the set is exhausted. Not uniform over models.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cfg = SolveConfig(seed=seed, mode="sample", symmetry_breaking=symmetry_breaking,
                      conflict_budget=conflict_budget)
    s = _solver_for(cnf, project_vars, cfg)
    models: list[int] = []
    seen: set[int] = set()
    attempt = 0
    while len(models) < count:
        s.randomize(random.Random(derive_seed(seed, attempt)))
        attempt += 1
        if not s.solve():
            return ModelSet(models, True, s.conflicts)
        m = s.projection_mask()
        if m in seen:
            if not s.block_current():
                return ModelSet(models, True, s.conflicts)
            continue
        seen.add(m)
        models.append(m)
    return ModelSet(models, False, s.conflicts)


# --- symmetry breaking ---------------------------------------------------------


def _swap_pairs(n: int, k: int) -> list[tuple[int, int]]:
    """(p, q) bit pairs compared by the lex-leader constraint for swapping k, k+1."""
    def s(i: int) -> int:
        return k + 1 if i == k else k if i == k + 1 else i
    pairs = []
    for p in range(n * n):
        i, j = divmod(p, n)
        q = s(i) * n + s(j)
        if q > p:
            pairs.append((p, q))
    return pairs


def lex_leader_clauses(n: int, first_aux: int) -> tuple[list[tuple[int, ...]], int]:
    """Clauses forcing ``x <=lex swap_k(x)`` for every adjacent swap (k, k+1).

    Returns the clauses and the next unused variable. Each auxiliary
    ``e_t`` is defined as "the first t compared pairs are equal".
    """
    clauses: list[tuple[int, ...]] = []
    nxt = first_aux
    for k in range(n - 1):
        pairs = _swap_pairs(n, k)
        prev = 0  # 0 stands for the constant "true"
        for t, (p, q) in enumerate(pairs):
            xp, xq = p + 1, q + 1
            guard = (-prev,) if prev else ()
            clauses.append(guard + (-xp, xq))
            if t == len(pairs) - 1:
                break
            e = nxt
            nxt += 1
            if prev:
                clauses.append((-e, prev))
            clauses.append((-e, -xp, xq))
            clauses.append((-e, xp, -xq))
            clauses.append(guard + (xp, xq, e))
            clauses.append(guard + (-xp, -xq, e))
            prev = e
    return clauses, nxt


def add_symmetry_breaking(cnf: Cnf, n: int) -> Cnf:
    if cnf.n and cnf.n != n:
        raise ValueError(f"CNF was grounded at n={cnf.n}, not {n}")
    extra, nxt = lex_leader_clauses(n, cnf.num_vars + 1)
    return Cnf(nxt - 1, list(cnf.clauses) + extra, n)


# --- DIMACS model lines --------------------------------------------------------


def format_model(model: Sequence[bool]) -> str:
    lits = [str(v + 1 if b else -(v + 1)) for v, b in enumerate(model)]
    return "v " + " ".join(lits + ["0"])


def parse_model(text: str) -> list[bool]:
    lits: list[int] = []
    for line in text.splitlines():
        if line.startswith("v"):
            lits.extend(int(t) for t in line[1:].split())
    lits = [l for l in lits if l != 0]
    model = [False] * (max((abs(l) for l in lits), default=0))
    for l in lits:
        model[abs(l) - 1] = l > 0
    return model
