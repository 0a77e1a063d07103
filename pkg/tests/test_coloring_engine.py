from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from app.core.utils import CapExceededError, PreconditionViolatedError
from app.services.coloring_engine import (
    ColoringConstraint,
    all_L_colorings,
    color_avoiding,
    count_request_matches,
    enumerate_L_colorings,
    is_L_colorable,
    is_proper_L_coloring,
    max_request_match,
    max_weighted_match,
)
from app.services.graph_core import Graph, ListAssignment, Request, WeightedRequest
from tests.conftest import complete_graph, path_graph
from tests.strategies import graphs, list_assignments


def brute_force(g: Graph, lists: ListAssignment) -> list[tuple[int, ...]]:
    result = []
    for colors in product(*(sorted(lists[v]) for v in g.vertices)):
        if all(colors[u - 1] != colors[v - 1] for u, v in g.edges):
            result.append(colors)
    return result


@st.composite
def instances(draw, max_n: int = 6):
    g = draw(graphs(max_n=max_n))
    return g, draw(list_assignments(g.n, max_size=3, universe=4))


# ==================== 枚举 ====================
def test_k2_colorings_in_lexicographic_order(k2):
    g, lists = k2
    enumeration = enumerate_L_colorings(g, lists)
    assert [phi.as_tuple() for phi in enumeration.colorings] == [(1, 2), (2, 1)]
    assert not enumeration.truncated


def test_enumeration_limit_truncates(k2):
    g, lists = k2
    enumeration = enumerate_L_colorings(g, lists, limit=1)
    assert len(enumeration.colorings) == 1
    assert enumeration.truncated


def test_counterexample_has_three_colorings(c4_counterexample):
    g, lists = c4_counterexample
    assert all_L_colorings(g, lists) == [(1, 2, 1, 2), (1, 2, 3, 2), (1, 3, 1, 2)]


def test_enumeration_cap():
    g = Graph(n=4)
    with pytest.raises(CapExceededError):
        all_L_colorings(g, ListAssignment.uniform(4, [1, 2, 3]), cap=10)


@settings(max_examples=200, deadline=None)
@given(instances())
def test_enumeration_matches_brute_force(instance):
    g, lists = instance
    assert all_L_colorings(g, lists) == brute_force(g, lists)


# ==================== 可着色判定 ====================
def test_k4_needs_four_colors(k4):
    assert is_L_colorable(k4, ListAssignment.uniform(4, [1, 2, 3])) is None
    phi = is_L_colorable(k4, ListAssignment.uniform(4, [1, 2, 3, 4]))
    assert is_proper_L_coloring(k4, ListAssignment.uniform(4, [1, 2, 3, 4]), phi)


def test_forced_color_can_make_instance_uncolorable(c4_counterexample):
    g, lists = c4_counterexample
    assert is_L_colorable(g, lists) is not None
    assert is_L_colorable(g, lists, ColoringConstraint(forced={1: 2})) is None


def test_forbidden_colors_respected(k2):
    g, lists = k2
    phi = is_L_colorable(g, lists, ColoringConstraint(forbidden={1: frozenset({1})}))
    assert phi.colors == {1: 2, 2: 1}


def test_constraint_validation(k2):
    _, lists = k2
    with pytest.raises(ValidationError):
        ColoringConstraint(forced={1: 1}, forbidden={1: frozenset({1})})
    with pytest.raises(PreconditionViolatedError):
        ColoringConstraint(forced={1: 5}).check_against(lists)


@settings(max_examples=200, deadline=None)
@given(instances())
def test_colorability_agrees_with_enumeration(instance):
    g, lists = instance
    phi = is_L_colorable(g, lists)
    if brute_force(g, lists):
        assert phi is not None and is_proper_L_coloring(g, lists, phi)
    else:
        assert phi is None


# ==================== 请求匹配 ====================
def test_counterexample_request_unsatisfiable(c4_counterexample):
    g, lists = c4_counterexample
    count, _ = max_request_match(g, lists, Request(entries={1: 2}))
    assert count == 0
    count, phi = max_request_match(g, lists, Request(entries={2: 3, 4: 2}))
    assert count == 2
    assert phi.as_tuple() == (1, 3, 1, 2)


def test_request_on_uncolorable_graph(k4):
    assert max_request_match(k4, ListAssignment.uniform(4, [1, 2, 3]), Request(entries={1: 1})) is None


def test_weighted_match(k2):
    g, lists = k2
    w = WeightedRequest(weights={(1, 1): 1, (2, 1): Fraction(3, 2)})
    weight, phi = max_weighted_match(g, lists, w)
    assert weight == Fraction(3, 2)
    assert phi.as_tuple() == (2, 1)


@settings(max_examples=200, deadline=None)
@given(instances(), st.data())
def test_max_request_match_is_exact(instance, data):
    g, lists = instance
    if g.n == 0:
        return
    domain = data.draw(st.lists(st.sampled_from(list(g.vertices)), min_size=1, unique=True))
    r = Request(entries={v: data.draw(st.sampled_from(sorted(lists[v]))) for v in domain})
    colorings = brute_force(g, lists)
    result = max_request_match(g, lists, r)
    if not colorings:
        assert result is None
        return
    expected = max(sum(1 for v, c in r.entries.items() if colors[v - 1] == c) for colors in colorings)
    count, phi = result
    assert count == expected == count_request_matches(r, phi)
    assert is_proper_L_coloring(g, lists, phi)


# ==================== 避色着色 ====================
@st.composite
def avoiding_cases(draw):
    g = draw(graphs(min_n=1, max_n=7, connected=True))
    palette = list(range(1, max((g.degree(v) for v in g.vertices), default=0) + 4))
    lists = ListAssignment.from_sequence(
        draw(
            st.lists(
                st.sampled_from(palette),
                min_size=g.degree(v) + 1,
                max_size=g.degree(v) + 2,
                unique=True,
            )
        )
        for v in g.vertices
    )
    v = draw(st.sampled_from(list(g.vertices)))
    c = draw(st.sampled_from(palette))
    return g, lists, v, c


def check_avoiding(g, lists, v, c):
    phi = color_avoiding(g, lists, v, c)
    assert is_proper_L_coloring(g, lists, phi)
    assert all(phi[u] != c for u in g.vertices if u != v)


@settings(max_examples=500, deadline=None)
@given(avoiding_cases())
def test_color_avoiding(case):
    check_avoiding(*case)


@pytest.mark.slow
@settings(max_examples=10_000, deadline=None)
@given(avoiding_cases())
def test_color_avoiding_full_battery(case):
    check_avoiding(*case)


def test_color_avoiding_preconditions():
    with pytest.raises(PreconditionViolatedError):
        color_avoiding(Graph(n=2), ListAssignment.uniform(2, [1, 2]), 1, 1)
    with pytest.raises(PreconditionViolatedError):
        color_avoiding(complete_graph(3), ListAssignment.uniform(3, [1, 2]), 1, 1)


def test_color_avoiding_on_path():
    lists = ListAssignment.uniform(3, [1, 2, 3])
    phi = color_avoiding(path_graph(3), lists, 2, 1)
    assert phi[1] != 1 and phi[3] != 1
