"""Dataset families: random negatives (GraphRandom) and bit-flip negatives (GraphPerturb)."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Iterator

from .catalog import PropertyDef
from .cnf import ground, negate_and_ground
from .evaluator import compile_checker
from .graph import DirectedGraph
from .sat import DEFAULT_CONFLICT_BUDGET, SAMPLER_ID, SolveConfig, enumerate_models, sample
from .seeds import derive_seed

log = logging.getLogger(__name__)

FAMILIES = ("random", "perturb")
DEFAULT_POSITIVES = 5000
DEFAULT_ENUM_CAP = 10**6
DEFAULT_ATTEMPT_CAP = 10**5
DEFAULT_STALL_LIMIT = 10**6


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenJob:
    prop: PropertyDef
    size: int
    family: str
    seed: int
    target_positives: int = DEFAULT_POSITIVES
    max_fbits: int = 2
    # None: on at (or below) the base size, where positives are enumerated
    symmetry_breaking: bool | None = None
    enum_cap: int = DEFAULT_ENUM_CAP
    attempt_cap: int = DEFAULT_ATTEMPT_CAP
    unpaired_threshold: float = 0.0
    stall_limit: int = DEFAULT_STALL_LIMIT
    conflict_budget: int = DEFAULT_CONFLICT_BUDGET

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.size < 1:
            raise ValueError("size must be >= 1")
        if self.target_positives < 1 or self.max_fbits < 1 or self.enum_cap < 1:
            raise ValueError("target_positives, max_fbits and enum_cap must be >= 1")

    @property
    def enumerates(self) -> bool:
        return self.size <= self.prop.base_size

    @property
    def uses_symmetry_breaking(self) -> bool:
        if self.symmetry_breaking is None:
            return self.enumerates
        return self.symmetry_breaking

    @property
    def dataset_id(self) -> str:
        return dataset_id(self.prop.name, self.family, self.size)


def dataset_id(prop: str, family: str, size: int) -> str:
    return f"{prop}/{family}/v{size}"


@dataclass
class LabeledSet:
    n: int
    positives: list[DirectedGraph]
    negatives: list[DirectedGraph]
    # pairs[k] = index into positives of the graph negatives[k] was flipped from
    pairs: list[int] | None = None

    @property
    def pair_map(self) -> dict[DirectedGraph, DirectedGraph]:
        if self.pairs is None:
            return {}
        return {self.positives[p]: self.negatives[k] for k, p in enumerate(self.pairs)}


@dataclass
class GenInfo:
    """Provenance collected while generating; ends up in the manifest."""

    sampler: str = SAMPLER_ID
    symmetry_breaking: bool = False
    exhaustive: bool = False
    positives_exhausted: bool = False
    negative_fallback: bool = False
    unpaired: int = 0
    flip_distance_histogram: dict[int, int] = field(default_factory=dict)


# --- positives ---------------------------------------------------------------


def generate_positives(job: GenJob, info: GenInfo) -> list[DirectedGraph]:
    n = job.size
    cnf = ground(job.prop.formula, n)
    info.symmetry_breaking = job.uses_symmetry_breaking
    if job.enumerates:
        cfg = SolveConfig(seed=job.seed, mode="enumerate_all", max_models=job.enum_cap,
                          symmetry_breaking=job.uses_symmetry_breaking,
                          conflict_budget=job.conflict_budget)
        found = enumerate_models(cnf, n * n, cfg)
        info.exhaustive = found.exhausted
        if not found.exhausted:
            log.warning("%s: enumeration stopped at cap %d", job.dataset_id, job.enum_cap)
    else:
        found = sample(cnf, n * n, job.target_positives, derive_seed(job.seed, "positives"),
                       symmetry_breaking=job.uses_symmetry_breaking,
                       conflict_budget=job.conflict_budget)
        info.positives_exhausted = found.exhausted
        info.exhaustive = found.exhausted
        if found.exhausted:
            log.warning("%s: only %d positives exist", job.dataset_id, len(found.models))
    return [DirectedGraph(n, m) for m in found.models]


# --- GraphRandom -------------------------------------------------------------


def random_negatives(job: GenJob, count: int, info: GenInfo) -> list[DirectedGraph]:
    """Rejection-sample ``count`` distinct uniformly random violating graphs."""
    n = job.size
    bits = n * n
    pred = compile_checker(job.prop.formula)
    rng = random.Random(derive_seed(job.seed, "negatives"))
    seen: set[int] = set()
    out: list[int] = []
    idle = 0
    while len(out) < count:
        m = rng.getrandbits(bits)
        if m in seen or pred(m, n):
            idle += 1
            if idle >= job.stall_limit:
                break
            continue
        idle = 0
        seen.add(m)
        out.append(m)
    if len(out) < count:
        # positives dominate the space: ask the solver for violating graphs instead
        info.negative_fallback = True
        need = count - len(out)
        found = sample(negate_and_ground(job.prop.formula, n), bits, need + len(out),
                       derive_seed(job.seed, "negatives", "solver"),
                       conflict_budget=job.conflict_budget)
        for m in found.models:
            if m not in seen:
                seen.add(m)
                out.append(m)
                if len(out) == count:
                    break
        if len(out) < count:
            raise GenerationError(
                f"{job.dataset_id}: only {len(out)} distinct negatives exist, need {count}")
    return [DirectedGraph(n, m) for m in out]


def gen_graphrandom(job: GenJob) -> tuple[LabeledSet, GenInfo]:
    if job.family != "random":
        raise ValueError("gen_graphrandom needs family='random'")
    info = GenInfo()
    positives = generate_positives(job, info)
    negatives = random_negatives(job, len(positives), info)
    return LabeledSet(job.size, positives, negatives), info


# --- GraphPerturb ------------------------------------------------------------


def distinct_indices(rng: random.Random, total: int, limit: int) -> Iterator[int]:
    """Up to ``limit`` distinct uniform draws from range(total) (lazy Fisher-Yates)."""
    moved: dict[int, int] = {}
    for i in range(min(total, limit)):
        j = rng.randrange(i, total)
        yield moved.get(j, j)
        moved[j] = moved.get(i, i)


def unrank_combination(index: int, k: int) -> list[int]:
    """The ``index``-th k-subset of the naturals in colex order, as sorted positions."""
    out = []
    for r in range(k, 0, -1):
        lo, hi = r - 1, r - 1
        while math.comb(hi, r) <= index:
            hi = 2 * hi + 1
        # largest c with comb(c, r) <= index
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if math.comb(mid, r) <= index:
                lo = mid
            else:
                hi = mid - 1
        out.append(lo)
        index -= math.comb(lo, r)
    return out[::-1]


def perturb_one(s: DirectedGraph, pred, taken: set[int], max_fbits: int,
                attempt_cap: int, rng: random.Random) -> tuple[int, int] | None:
    """Flip 1..max_fbits bits of ``s`` until an unused violating graph appears.

    Returns (mask, bits flipped) or None. Each flip count gets at most
    ``min(C(n*n, f), attempt_cap)`` attempts, every attempt a different set of
    positions.
    """
    n = s.n
    length = n * n
    for f in range(1, max_fbits + 1):
        if f > length:
            break
        total = math.comb(length, f)
        for idx in distinct_indices(rng, total, attempt_cap):
            flip = 0
            for p in unrank_combination(idx, f):
                flip |= 1 << p
            t = s.mask ^ flip
            if t not in taken and not pred(t, n):
                return t, f
    return None


def gen_graphperturb(job: GenJob) -> tuple[LabeledSet, GenInfo]:
    if job.family != "perturb":
        raise ValueError("gen_graphperturb needs family='perturb'")
    info = GenInfo()
    positives = generate_positives(job, info)
    pred = compile_checker(job.prop.formula)
    taken: set[int] = set()
    kept: list[DirectedGraph] = []
    negatives: list[DirectedGraph] = []
    pairs: list[int] = []
    unpaired = 0
    allowed = job.unpaired_threshold * len(positives)
    hist: dict[int, int] = {}
    for s in positives:
        rng = random.Random(derive_seed(job.seed, "perturb", s.mask))
        hit = perturb_one(s, pred, taken, job.max_fbits, job.attempt_cap, rng)
        if hit is None:
            unpaired += 1
            if unpaired > allowed:
                # fail fast: every further miss costs a full search
                raise GenerationError(
                    f"{job.dataset_id}: positive {s} has no unused negative within "
                    f"{job.max_fbits} flipped bits (unpaired threshold {job.unpaired_threshold})")
            continue
        t, f = hit
        taken.add(t)
        hist[f] = hist.get(f, 0) + 1
        pairs.append(len(kept))
        kept.append(s)
        negatives.append(DirectedGraph(s.n, t))
    info.unpaired = unpaired
    info.flip_distance_histogram = dict(sorted(hist.items()))
    return LabeledSet(job.size, kept, negatives, pairs), info


def generate(job: GenJob) -> tuple[LabeledSet, GenInfo]:
    return gen_graphrandom(job) if job.family == "random" else gen_graphperturb(job)


# --- audit -------------------------------------------------------------------


@dataclass
class VerifyReport:
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str) -> None:
        self.violations.append((kind, detail))

    def count(self, kind: str) -> int:
        return sum(1 for k, _ in self.violations if k == kind)


def verify_dataset(ls: LabeledSet, prop: PropertyDef, max_fbits: int | None = None,
                   max_reports: int = 100) -> VerifyReport:
    """Re-check labels, balance, duplicates and (if paired) flip distances."""
    rep = VerifyReport()
    pred = compile_checker(prop.formula)
    n = ls.n

    def note(kind: str, detail: str) -> None:
        if len(rep.violations) < max_reports:
            rep.add(kind, detail)
        elif len(rep.violations) == max_reports:
            rep.add("truncated", "further violations omitted")

    for label, graphs in (("positive", ls.positives), ("negative", ls.negatives)):
        want = label == "positive"
        seen: set[int] = set()
        for k, g in enumerate(graphs):
            if g.n != n:
                note("size", f"{label} {k} has n={g.n}, dataset n={n}")
            if pred(g.mask, g.n) != want:
                note("label", f"{label} {k} ({g}) is labelled {label} but evaluates otherwise")
            if g.mask in seen:
                note("duplicate", f"{label} {k} ({g}) repeats an earlier {label}")
            seen.add(g.mask)
    overlap = {g.mask for g in ls.positives} & {g.mask for g in ls.negatives}
    for m in sorted(overlap):
        note("overlap", f"graph {DirectedGraph(n, m)} is both positive and negative")
    if len(ls.positives) != len(ls.negatives):
        note("balance", f"{len(ls.positives)} positives vs {len(ls.negatives)} negatives")
    if ls.pairs is not None:
        limit = max_fbits if max_fbits is not None else n * n
        if len(ls.pairs) != len(ls.negatives):
            note("pairing", f"{len(ls.pairs)} pair refs for {len(ls.negatives)} negatives")
        for k, (p, t) in enumerate(zip(ls.pairs, ls.negatives)):
            if not 0 <= p < len(ls.positives):
                note("pairing", f"negative {k} refers to missing positive {p}")
                continue
            d = (ls.positives[p].mask ^ t.mask).bit_count()
            if not 1 <= d <= limit:
                note("hamming", f"negative {k} is {d} bits from positive {p} (allowed 1..{limit})")
    return rep
