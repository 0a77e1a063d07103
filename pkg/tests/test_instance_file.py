from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.api.instance_file import InstanceFile, parse_instance, serialize_instance
from app.core.utils import ParseError, SemanticError
from app.services.gadget_builder import KnapsackSpec, build_knapsack_graph
from app.services.graph_core import Request, WeightedRequest
from tests.strategies import graphs, list_assignments


def test_parse_k2(k2_instance_text):
    instance = parse_instance(k2_instance_text)
    assert instance.graph.n == 2
    assert instance.graph.sorted_edges() == [(1, 2)]
    assert instance.lists[1] == frozenset({1, 2})
    assert instance.request is None and instance.weights is None


def test_parse_comments_requests_and_weights():
    text = """
    # 注释行
    graph 3
    L 3 1 2   # 行尾注释
    e 3 1
    L 1 1 2
    L 2 2
    r 1 2
    w 1 1 3/2
    w 3 2 2
    """
    instance = parse_instance(text)
    assert instance.graph.sorted_edges() == [(1, 3)]
    assert instance.request.entries == {1: 2}
    assert instance.weights.weights == {(1, 1): Fraction(3, 2), (3, 2): Fraction(2)}


@pytest.mark.parametrize(
    "text, line",
    [
        ("e 1 2\ngraph 2\n", 1),
        ("graph 2\ngraph 2\n", 2),
        ("graph 2\ne 1 2\ne 2 1\nL 1 1\nL 2 2\n", 3),
        ("graph 2\nL 1 1\nL 1 2\n", 3),
        ("graph 1\nL 1 1\nr 1 1\nr 1 1\n", 4),
        ("graph 1\nL 1 1\nw 1 1 1\nw 1 1 2\n", 4),
        ("graph 1\nx 1\n", 2),
        ("graph 1\nL 1 a\n", 2),
        ("graph 1\ne 1\n", 2),
        ("graph 1\nL 1 1\nw 1 1 1/0\n", 3),
        ("graph two\n", 1),
        ("", 1),
    ],
)
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as info:
        parse_instance(text)
    assert info.value.line == line
    assert info.value.to_dict()["details"] == {"line": line}


@pytest.mark.parametrize(
    "text",
    [
        "graph 2\ne 1 3\nL 1 1\nL 2 1\n",
        "graph 2\ne 1 1\nL 1 1\nL 2 1\n",
        "graph 2\nL 1 1\n",
        "graph 2\nL 1 1\nL 3 1\n",
        "graph 1\nL 1 1 1\n",
        "graph 1\nL 1 0\n",
        "graph 1\nL 1 1\nr 1 2\n",
        "graph 1\nL 1 1\nr 2 1\n",
        "graph 1\nL 1 1\nw 1 1 -1/2\n",
        "graph 1\nL 1 1\nw 1 2 1\n",
    ],
)
def test_semantic_errors(text):
    with pytest.raises(SemanticError):
        parse_instance(text)


def test_missing_list_has_no_line():
    with pytest.raises(SemanticError) as info:
        parse_instance("graph 2\nL 1 1\n")
    assert info.value.line is None


def test_serialize_is_canonical():
    text = "graph 3\ne 3 2\ne 1 2\nL 3 2 1\nL 1 1\nL 2 5 3\nw 1 1 2/4\nr 2 5\n"
    assert serialize_instance(parse_instance(text)) == (
        "graph 3\ne 1 2\ne 2 3\nL 1 1\nL 2 3 5\nL 3 1 2\nr 2 5\nw 1 1 1/2\n"
    )


def test_role_comments_survive_parsing():
    construction = build_knapsack_graph(KnapsackSpec(s=(1, 1), t=1))
    instance = InstanceFile(graph=construction.graph, lists=construction.list_assignment)
    comments = {v: role.label() for v, role in construction.roles.items()}
    text = serialize_instance(instance, comments)
    assert "L 1 1 2 3  # v1\n" in text
    assert "L 7 1 4 5  # y\n" in text
    parsed = parse_instance(text)
    assert parsed.graph.sorted_edges() == construction.graph.sorted_edges()
    assert parsed.lists.lists == construction.lists


def test_empty_request_and_weights_are_dropped(k2):
    g, lists = k2
    instance = InstanceFile(graph=g, lists=lists, request=Request(), weights=WeightedRequest())
    assert instance.request is None and instance.weights is None


@st.composite
def instances(draw):
    g = draw(graphs(max_n=6))
    lists = draw(list_assignments(g.n, max_size=3, universe=5))
    vertices = draw(st.lists(st.sampled_from(list(g.vertices)), unique=True)) if g.n else []
    request = Request(entries={v: draw(st.sampled_from(sorted(lists[v]))) for v in vertices})
    weights = {}
    for v in vertices:
        c = draw(st.sampled_from(sorted(lists[v])))
        weights[(v, c)] = Fraction(draw(st.integers(0, 20)), draw(st.integers(1, 6)))
    return InstanceFile(graph=g, lists=lists, request=request, weights=WeightedRequest(weights=weights))


@settings(max_examples=150, deadline=None)
@given(instances())
def test_serialize_then_parse(instance):
    text = serialize_instance(instance)
    parsed = parse_instance(text)
    assert parsed.graph.sorted_edges() == instance.graph.sorted_edges()
    assert parsed.lists.lists == instance.lists.lists
    assert parsed.request == instance.request or parsed.request.entries == instance.request.entries
    assert (parsed.weights is None) == (instance.weights is None)
    if instance.weights is not None:
        assert parsed.weights.weights == instance.weights.weights
    assert serialize_instance(parsed) == text
