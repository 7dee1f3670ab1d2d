import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relforge.catalog import PropertyDef, builtin_catalog, get_property
from relforge.dsl import parse
from relforge.evaluator import check
from relforge.generator import (
    GenerationError,
    GenInfo,
    GenJob,
    LabeledSet,
    distinct_indices,
    gen_graphperturb,
    gen_graphrandom,
    generate_positives,
    perturb_one,
    random_negatives,
    unrank_combination,
    verify_dataset,
)
from relforge.evaluator import compile_checker
from relforge.graph import DirectedGraph, flip_bits, hamming
from relforge.oracle import brute_masks

REFL = get_property("reflexivity")
CONNEX = get_property("connex")


def small(prop, size, family, seed=1, **kw):
    return GenJob(prop, size, family, seed, **kw)


def test_job_validation():
    with pytest.raises(ValueError):
        small(REFL, 3, "mixed")
    with pytest.raises(ValueError):
        small(REFL, 3, "random", target_positives=0)
    with pytest.raises(ValueError):
        small(REFL, 3, "random", max_fbits=0)


def test_symmetry_breaking_default():
    assert small(REFL, 5, "random").uses_symmetry_breaking
    assert not small(REFL, 6, "random").uses_symmetry_breaking
    assert not small(REFL, 5, "random", symmetry_breaking=False).uses_symmetry_breaking


def test_random_family_at_base_size():
    ls, info = gen_graphrandom(small(REFL, 5, "random"))
    assert info.exhaustive and info.symmetry_breaking
    assert len(ls.positives) == len(ls.negatives) > 0
    assert all(g.mask & 0b1000001000001000001000001 == 0b1000001000001000001000001 for g in ls.positives)
    assert verify_dataset(ls, REFL).ok


def test_random_family_above_base():
    ls, info = gen_graphrandom(small(REFL, 6, "random", target_positives=500))
    assert len(ls.positives) == len(ls.negatives) == 500
    assert len({g.mask for g in ls.positives}) == 500
    assert not info.exhaustive
    assert verify_dataset(ls, REFL).ok


@pytest.mark.parametrize("prop", builtin_catalog(), ids=lambda p: p.name)
def test_positives_within_brute_force_set(prop):
    for n in (2, 3, 4):
        truth = brute_masks(prop, n)
        for sb in (False, True):
            job = GenJob(prop, n, "random", 3, target_positives=50, symmetry_breaking=sb)
            pos = generate_positives(job, GenInfo())
            assert {g.mask for g in pos} <= truth
        want = min(50, (1 << (n * n)) - len(truth))
        neg = random_negatives(job, want, GenInfo())
        assert len({g.mask for g in neg}) == want
        assert not {g.mask for g in neg} & truth


def test_infeasible_balance_is_an_error():
    # 12 of the 16 two-node graphs are antisymmetric
    with pytest.raises(GenerationError):
        gen_graphrandom(GenJob(get_property("antisymmetry"), 2, "random", 1))


def test_negative_fallback_when_positives_dominate():
    # negatives are exactly the 64 reflexive graphs out of 512
    mostly = PropertyDef("loopless_somewhere", parse("some u | not edge(u, u)"), 2, "combined")
    ls, info = gen_graphrandom(GenJob(mostly, 3, "random", 1, target_positives=40, stall_limit=1))
    assert info.negative_fallback
    assert len(ls.positives) == len(ls.negatives) == 40
    assert verify_dataset(ls, mostly).ok


def test_random_generation_fails_when_negatives_run_out():
    taut = PropertyDef("taut", parse("all u | u = u"), 2, "combined")
    with pytest.raises(GenerationError):
        gen_graphrandom(GenJob(taut, 2, "random", 1, stall_limit=100))


def test_unrank_is_a_bijection():
    for length, k in ((6, 1), (6, 2), (7, 3), (9, 2)):
        combos = [tuple(unrank_combination(i, k)) for i in range(math.comb(length, k))]
        assert len(set(combos)) == len(combos)
        assert all(len(set(c)) == k and max(c) < length and list(c) == sorted(c) for c in combos)


@given(st.integers(1, 400), st.integers(1, 500), st.integers(0, 2**32))
def test_distinct_indices(total, limit, seed):
    got = list(distinct_indices(random.Random(seed), total, limit))
    assert len(got) == min(total, limit)
    assert len(set(got)) == len(got)
    assert all(0 <= x < total for x in got)


def test_perturb_reflexivity_distance_one():
    ls, info = gen_graphperturb(small(REFL, 5, "perturb"))
    assert info.flip_distance_histogram == {1: len(ls.positives)}
    assert len(ls.pair_map) == len(ls.positives)
    for s, t in ls.pair_map.items():
        assert hamming(s, t) == 1 and check(REFL.formula, s) and not check(REFL.formula, t)
    assert verify_dataset(ls, REFL, max_fbits=2).ok


def test_complete_digraph_needs_two_flips_for_connex():
    full = DirectedGraph.full(3)
    pred = compile_checker(CONNEX.formula)
    assert all(pred(flip_bits(full, [p]).mask, 3) for p in range(9))
    doubles = [(a, b) for a in range(9) for b in range(a + 1, 9)
               if not pred(flip_bits(full, [a, b]).mask, 3)]
    assert doubles == [(1, 3), (2, 6), (5, 7)]  # both directions of one pair
    hit = perturb_one(full, pred, set(), 2, 10**5, random.Random(0))
    assert hit is not None and hit[1] == 2
    assert perturb_one(full, pred, set(), 1, 10**5, random.Random(0)) is None


def test_perturb_connex_pairs_everything():
    ls, info = gen_graphperturb(small(CONNEX, 4, "perturb"))
    assert info.unpaired == 0
    assert set(info.flip_distance_histogram) <= {1, 2}
    assert 2 in info.flip_distance_histogram  # graphs with every pair bidirected
    assert verify_dataset(ls, CONNEX, max_fbits=2).ok


def test_unpaired_threshold():
    # with one flip allowed, complete-ish connex graphs have no violating neighbour
    with pytest.raises(GenerationError):
        gen_graphperturb(small(CONNEX, 3, "perturb", max_fbits=1))
    ls, info = gen_graphperturb(small(CONNEX, 3, "perturb", max_fbits=1, unpaired_threshold=1.0))
    assert info.unpaired > 0
    assert len(ls.positives) == len(ls.negatives)
    assert verify_dataset(ls, CONNEX, max_fbits=1).ok


def test_perturb_is_deterministic():
    a, _ = gen_graphperturb(small(CONNEX, 7, "perturb", seed=5, target_positives=200))
    b, _ = gen_graphperturb(small(CONNEX, 7, "perturb", seed=5, target_positives=200))
    assert a.positives == b.positives and a.negatives == b.negatives and a.pairs == b.pairs


def test_negatives_distinct_across_positives():
    ls, _ = gen_graphperturb(small(REFL, 3, "perturb", symmetry_breaking=False))
    assert len({g.mask for g in ls.negatives}) == len(ls.negatives) == 64


# --- verification fault injection --------------------------------------------


def fresh_perturb():
    ls, _ = gen_graphperturb(small(REFL, 4, "perturb"))
    return ls


def test_verify_flags_one_bad_label():
    ls = fresh_perturb()
    ls.positives[0] = ls.negatives[-1]
    rep = verify_dataset(ls, REFL, max_fbits=2)
    assert rep.count("label") == 1


def test_verify_flags_hamming_bound():
    ls = fresh_perturb()
    s = ls.positives[ls.pairs[0]]
    far = flip_bits(s, [0, 1, 2, 3, 4])  # bit 0 is a loop, so this violates
    assert not check(REFL.formula, far)
    ls.negatives[0] = far
    rep = verify_dataset(ls, REFL, max_fbits=2)
    assert rep.count("hamming") == 1
    assert rep.count("label") == 0


def test_verify_flags_duplicates_balance_overlap():
    ls = fresh_perturb()
    ls.negatives.append(ls.negatives[0])
    ls.pairs.append(0)
    rep = verify_dataset(ls, REFL)
    assert rep.count("duplicate") == 1 and rep.count("balance") == 1
    g = DirectedGraph.full(2)
    rep = verify_dataset(LabeledSet(2, [g], [g]), REFL)
    assert rep.count("overlap") == 1 and rep.count("label") == 1


def test_dense_surjective_graph_needs_more_than_two_flips():
    surj = get_property("surjectivity")
    pred = compile_checker(surj.formula)
    full = DirectedGraph.full(3)
    assert perturb_one(full, pred, set(), 2, 10**5, random.Random(0)) is None
    hit = perturb_one(full, pred, set(), 3, 10**5, random.Random(0))
    assert hit is not None and hit[1] == 3  # clear one whole column


def test_unpaired_positive_fails_fast():
    surj = get_property("surjectivity")
    with pytest.raises(GenerationError, match="no unused negative within 2 flipped bits"):
        gen_graphperturb(GenJob(surj, 15, "perturb", 1, target_positives=50))
