import itertools

import pytest
from hypothesis import given, settings

from relforge.catalog import builtin_catalog, get_property
from relforge.cnf import Cnf, CnfError, edge_var, ground, negate_and_ground, parse_dimacs
from relforge.dsl import EdgeAtom, Forall
from relforge.evaluator import check_mask
from strategies import formulas


def cnf_projections(cnf: Cnf) -> set[int]:
    """Projections of all CNF models onto the edge variables, by brute force."""
    e = cnf.num_edge_vars
    aux = cnf.num_vars - e
    out = set()
    for m in range(1 << e):
        edge_bits = [bool(m >> k & 1) for k in range(e)]
        for tail in itertools.product((False, True), repeat=aux):
            if cnf.satisfied_by(edge_bits + list(tail)):
                out.add(m)
                break
    return out


def test_reflexivity_n3_units():
    assert ground(get_property("reflexivity").formula, 3).clauses == [(1,), (5,), (9,)]


def test_irreflexivity_n2():
    assert ground(get_property("irreflexivity").formula, 2).clauses == [(-1,), (-4,)]


def test_functionality_n2():
    assert ground(get_property("functionality").formula, 2).clauses == [(-1, -2), (-3, -4)]


def test_negated_reflexivity_n2():
    cnf = negate_and_ground(get_property("reflexivity").formula, 2)
    assert cnf.clauses == [(-1, -4)]
    assert cnf.num_vars == 4


def test_edge_var_numbering():
    assert edge_var(3, 0, 0) == 1
    assert edge_var(3, 2, 1) == 8


@pytest.mark.parametrize("prop", builtin_catalog(), ids=lambda p: p.name)
def test_catalog_is_aux_free(prop):
    for n in (2, 3, 4):
        cnf = ground(prop.formula, n)
        assert cnf.num_vars == n * n


@pytest.mark.parametrize("prop", builtin_catalog(), ids=lambda p: p.name)
@pytest.mark.parametrize("n", [1, 2])
def test_models_match_brute_force(prop, n):
    want = {m for m in range(1 << (n * n)) if check_mask(prop.formula, m, n)}
    assert cnf_projections(ground(prop.formula, n)) == want
    neg = {m for m in range(1 << (n * n))} - want
    assert cnf_projections(negate_and_ground(prop.formula, n)) == neg


@settings(max_examples=60)
@given(formulas(depth=3))
def test_random_formula_grounding(f):
    for n in (1, 2):
        cnf = ground(f, n)
        cnf.validate()
        if cnf.num_vars - n * n > 12:
            continue
        want = {m for m in range(1 << (n * n)) if check_mask(f, m, n)}
        assert cnf_projections(cnf) == want


def test_clauses_are_sorted_and_unique():
    cnf = ground(get_property("total_order").formula, 4)
    assert len(set(cnf.clauses)) == len(cnf.clauses)
    for c in cnf.clauses:
        assert list(c) == sorted(c, key=lambda l: (abs(l), l < 0))


def test_unsatisfiable_grounds_to_empty_clause():
    from relforge.dsl import parse
    cnf = ground(parse("all u | u != u"), 2)
    assert () in cnf.clauses


def test_ground_rejects_free_variables():
    with pytest.raises(CnfError):
        ground(Forall(("u",), EdgeAtom("u", "v")), 2)
    with pytest.raises(CnfError):
        ground(get_property("reflexivity").formula, 0)


def test_dimacs_round_trip():
    cnf = ground(get_property("transitivity").formula, 3)
    back = parse_dimacs(cnf.to_dimacs(["transitivity"]))
    assert back.clauses == cnf.clauses and back.num_vars == cnf.num_vars


@pytest.mark.parametrize("text", [
    "1 2 0\n",
    "p cnf 2 1\n1 3 0\n",
    "p cnf 2 2\n1 2 0\n",
    "p cnf 2 1\n1 x 0\n",
])
def test_dimacs_errors(text):
    with pytest.raises(CnfError):
        parse_dimacs(text)
