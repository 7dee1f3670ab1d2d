from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from relforge.metrics import (
    ASPECTS,
    DegenerateMeanError,
    IncompleteGridError,
    MetricsError,
    parse_results,
    relative_scores,
    render_tables,
    score_records,
    u_score,
)

SIZES = list(range(6, 16))


def test_u_score_examples():
    assert u_score([(s, 1.0) for s in SIZES]) == 1.0
    assert u_score([(s, 0.5) for s in SIZES]) == 0.5
    acc = (1, 1, 1, 1, 1, 0, 0, 0, 0, 0)
    assert u_score(zip(SIZES, acc), exact=True) == Fraction(40, 105)
    assert abs(u_score(zip(SIZES, acc)) - 40 / 105) < 1e-12


@pytest.mark.parametrize("points", [
    [(s, 1.0) for s in SIZES[:9]],
    [(s, 1.5) for s in SIZES],
    [(s, -0.1) for s in SIZES],
    [(6, 1.0)] * 10,
    [(s - 6, 1.0) for s in SIZES],
])
def test_u_score_errors(points):
    with pytest.raises(MetricsError):
        u_score(points)


def test_u_score_configurable_count():
    assert u_score([(3, 1.0), (4, 0.0)], count=2) == pytest.approx(3 / 7)
    assert u_score([(3, 1.0)], count=None) == 1.0


accuracies = st.lists(st.fractions(0, 1, max_denominator=1000), min_size=10, max_size=10)


@given(accuracies, st.permutations(range(10)))
def test_u_score_permutation_invariant(acc, perm):
    pts = list(zip(SIZES, acc))
    assert u_score(pts, exact=True) == u_score([pts[k] for k in perm], exact=True)


@given(accuracies)
def test_u_score_bounds(acc):
    u = u_score(zip(SIZES, acc), exact=True)
    assert min(acc) <= u <= max(acc)


@given(accuracies, st.integers(0, 9), st.fractions(0, 1, max_denominator=1000))
def test_u_score_monotone(acc, k, bump):
    assume(acc[k] + bump <= 1 and bump > 0)
    raised = list(acc)
    raised[k] += bump
    assert u_score(zip(SIZES, raised), exact=True) > u_score(zip(SIZES, acc), exact=True)


def test_two_model_relative_scores():
    st_ = relative_scores({("generalizability", "p", "A"): 0.8, ("generalizability", "p", "B"): 0.4})
    assert st_.R_api["generalizability", "p", "A"] == pytest.approx(4 / 3)
    assert st_.R_api["generalizability", "p", "B"] == pytest.approx(2 / 3)
    exact = relative_scores({("generalizability", "p", "A"): Fraction(4, 5),
                             ("generalizability", "p", "B"): Fraction(2, 5)})
    assert exact.R_api["generalizability", "p", "A"] == Fraction(4, 3)


def test_identical_models_score_one():
    U = {(a, p, i): 0.7 for a in ASPECTS for p in ("x", "y") for i in ("m1", "m2", "m3")}
    st_ = relative_scores(U)
    assert all(v == pytest.approx(1.0) for v in st_.R_api.values())
    assert all(v == pytest.approx(1.0) for v in st_.R_i.values())


def test_incomplete_grid():
    U = {("robustness", "p", "A"): 0.5, ("robustness", "q", "B"): 0.5}
    with pytest.raises(IncompleteGridError) as err:
        relative_scores(U)
    assert set(err.value.missing) == {("robustness", "p", "B"), ("robustness", "q", "A")}


def test_degenerate_mean():
    with pytest.raises(DegenerateMeanError):
        relative_scores({("robustness", "p", "A"): 0.0, ("robustness", "p", "B"): 0.0})


grid_values = st.fractions(Fraction(1, 100), 1, max_denominator=100)


@st.composite
def grids(draw):
    na, np_, ni = draw(st.integers(1, 3)), draw(st.integers(1, 4)), draw(st.integers(1, 5))
    return {(ASPECTS[a], f"p{p}", f"m{i}"): draw(grid_values)
            for a in range(na) for p in range(np_) for i in range(ni)}


@given(grids())
def test_mean_relative_score_is_one(U):
    st_ = relative_scores(U)
    for a in st_.aspects:
        for p in st_.properties:
            assert sum(st_.R_api[a, p, i] for i in st_.models) / st_.N_G == 1
    fl = relative_scores({k: float(v) for k, v in U.items()})
    for a in fl.aspects:
        for p in fl.properties:
            assert abs(sum(fl.R_api[a, p, i] for i in fl.models) / fl.N_G - 1) < 1e-9


@given(grids(), st.fractions(Fraction(1, 10), 10, max_denominator=50), st.data())
def test_scaling_invariance(U, c, data):
    a, p, _ = data.draw(st.sampled_from(sorted(U)))
    scaled = {k: v * c if k[:2] == (a, p) else v for k, v in U.items()}
    s1, s2 = relative_scores(U), relative_scores(scaled)
    assert s1.R_api == s2.R_api
    assert s1.ranking(a, p) == s2.ranking(a, p)


@given(grids())
def test_aggregates_are_means(U):
    st_ = relative_scores(U)
    for i in st_.models:
        assert st_.R_i[i] == sum(st_.R_ai[a, i] for a in st_.aspects) / st_.N_a
        assert st_.R_i[i] == sum(st_.R_pi[p, i] for p in st_.properties) / st_.N_p


def results_text(models, props, sizes, acc=lambda m, p, a, g: 0.5):
    lines = ["model,property,aspect,gsize,accuracy"]
    for m in models:
        for p in props:
            for a in ASPECTS:
                for g in sizes:
                    lines.append(f"{m},{p},{a},{g},{acc(m, p, a, g)}")
    return "\n".join(lines) + "\n"


def test_results_parsing_errors():
    with pytest.raises(MetricsError):
        parse_results("model,property,aspect,size,accuracy\n")
    with pytest.raises(MetricsError):
        parse_results("model,property,aspect,gsize,accuracy\nA,p,speed,6,0.5\n")
    with pytest.raises(MetricsError):
        parse_results("model,property,aspect,gsize,accuracy\nA,p,robustness,6,1.5\n")
    with pytest.raises(MetricsError):
        parse_results("model,property,aspect,gsize,accuracy\nA,p,robustness,6,0.5\nA,p,robustness,6,0.5\n")


def test_single_model_tables_are_all_one():
    recs = parse_results(results_text(["only"], ["reflexivity", "connex"], SIZES,
                                      lambda m, p, a, g: round(0.3 + g / 100, 3)))
    tables = render_tables(score_records(recs), recs)
    for name in ("aspects.csv", "properties.csv", "overall.csv"):
        body = tables[name].splitlines()[1:]
        assert all(line.split(",")[1] == "1.000" for line in body)
    assert "per_size/robustness__connex.csv" in tables
