from fractions import Fraction
from itertools import product

import pytest
from pydantic import ValidationError

from app.core.utils import BadEndpointListError, BadRequestError, CapExceededError
from app.services.catalog import random_requests
from app.services.coloring_engine import count_request_matches, is_proper_L_coloring
from app.services.gadget_builder import (
    MACHINE_LIST,
    S_LIST,
    GadgetConstruction,
    KnapsackSpec,
    RoleKind,
    VertexRole,
    all_ones_ratio,
    attach_gadget,
    build_knapsack_graph,
    build_log_gap_instance,
    canonical_coloring,
    expected_realizable_sets,
    gadget_extension_table,
    hard_request_best_ratio,
    log_gap_spec,
    machine_vertex,
    quarter_satisfy,
    realizable_sets,
    realize,
    singleton_requests_satisfiable,
    sink_vertex,
    split_satisfy,
)
from app.services.graph_core import Request, WeightedRequest


@pytest.fixture(scope="module")
def small_knapsack() -> GadgetConstruction:
    return build_knapsack_graph(KnapsackSpec(s=(1, 1), t=1))


@pytest.fixture(scope="module")
def log_gap_two() -> tuple[GadgetConstruction, WeightedRequest]:
    return build_log_gap_instance(2)


def endpoints(*lists: frozenset[int]) -> GadgetConstruction:
    construction = GadgetConstruction()
    for i, colors in enumerate(lists, start=1):
        construction, _ = construction.add_vertex(colors, VertexRole(kind=RoleKind.ENDPOINT, index=(i,)))
    return construction


# ==================== 小工具 ====================
def test_attach_gadget_adds_five_vertices():
    construction = attach_gadget(endpoints(S_LIST, S_LIST, MACHINE_LIST), 1, 2, 3)
    assert construction.n_vertices == 8
    assert len(construction.edges) == 10
    assert construction.lists[4] == construction.lists[5] == construction.lists[6] == frozenset({1, 6, 7})
    assert construction.lists[7] == construction.lists[8] == MACHINE_LIST
    assert construction.roles[4].label() == "z1 gadget1"


def test_attach_gadget_with_repeated_endpoint():
    construction = attach_gadget(endpoints(S_LIST, MACHINE_LIST), 1, 1, 2)
    assert construction.n_vertices == 7
    assert {(1, 3), (1, 4)} <= set(construction.edges)


def test_attach_gadget_rejects_other_lists():
    with pytest.raises(BadEndpointListError):
        attach_gadget(endpoints(frozenset({1, 2}), S_LIST, S_LIST), 1, 2, 3)


@pytest.mark.parametrize(
    "u_list, v_list, w_list, same_uv",
    [
        (S_LIST, S_LIST, MACHINE_LIST, False),
        (S_LIST, MACHINE_LIST, MACHINE_LIST, False),
        (MACHINE_LIST, MACHINE_LIST, S_LIST, False),
        (S_LIST, S_LIST, MACHINE_LIST, True),
        (MACHINE_LIST, MACHINE_LIST, MACHINE_LIST, True),
    ],
)
def test_gadget_forces_color_one(u_list, v_list, w_list, same_uv):
    table = gadget_extension_table(u_list, v_list, w_list, same_uv)
    for (cu, cv, cw), extends in table.items():
        assert extends == (not (cu == cv == 1 and cw != 1))
    expected = len(u_list) * len(w_list) if same_uv else len(u_list) * len(v_list) * len(w_list)
    assert len(table) == expected


# ==================== 背包图 ====================
def test_small_knapsack_size(small_knapsack):
    assert small_knapsack.n_vertices == 42
    assert len(small_knapsack.gadgets) == 7
    assert [g.step for g in small_knapsack.gadgets] == ["a", "a", "b", "b", "c", "d", "d"]
    spec = small_knapsack.spec
    assert (machine_vertex(spec, 1, 0), sink_vertex(spec)) in small_knapsack.edges


def test_larger_knapsack_respects_vertex_bound():
    spec = KnapsackSpec(s=(2, 1, 3, 1, 2), t=4)
    construction = build_knapsack_graph(spec)
    assert construction.n_vertices < 11 * spec.n * (spec.t + 2)
    assert {len(colors) for colors in construction.lists.values()} == {3}


def test_knapsack_spec_validation():
    with pytest.raises(ValidationError):
        KnapsackSpec(s=(0, 1), t=1)
    with pytest.raises(ValidationError):
        KnapsackSpec(s=(), t=1)


def test_canonical_colorings(small_knapsack):
    graph, lists = small_knapsack.graph, small_knapsack.list_assignment
    y = sink_vertex(small_knapsack.spec)
    first = canonical_coloring(small_knapsack, 1)
    assert (first[1], first[machine_vertex(small_knapsack.spec, 1, 0)], first[y]) == (2, 1, 4)
    assert canonical_coloring(small_knapsack, 3)[y] == 1
    for index in range(1, 5):
        assert is_proper_L_coloring(graph, lists, canonical_coloring(small_knapsack, index))


# ==================== 可实现集合 ====================
def test_small_realizable_sets(small_knapsack):
    family = realizable_sets(small_knapsack)
    assert family == [frozenset(), frozenset({1}), frozenset({2})]
    assert realize(small_knapsack, {1, 2}) is None
    phi = realize(small_knapsack, {1})
    assert phi[1] == 1 and phi[2] != 1


def test_log_gap_two_realizable_sets(log_gap_two):
    construction, _ = log_gap_two
    family = realizable_sets(construction)
    assert family == [frozenset(), frozenset({1}), frozenset({2}), frozenset({3}), frozenset({2, 3})]


def test_realizable_sets_cap(small_knapsack):
    with pytest.raises(CapExceededError):
        realizable_sets(small_knapsack, max_n=1)


def knapsack_specs(max_n: int, max_t: int):
    for t in range(1, max_t + 1):
        for n in range(1, max_n + 1):
            for s in product(range(1, t + 2), repeat=n):
                yield KnapsackSpec(s=s, t=t)


def test_realizable_iff_fits():
    for spec in knapsack_specs(2, 2):
        assert realizable_sets(build_knapsack_graph(spec)) == expected_realizable_sets(spec), spec


@pytest.mark.slow
def test_realizable_iff_fits_full():
    for spec in knapsack_specs(3, 3):
        assert realizable_sets(build_knapsack_graph(spec)) == expected_realizable_sets(spec), spec


# ==================== 对数间隙 ====================
@pytest.mark.parametrize(
    "k, s, t",
    [(1, (1,), 1), (2, (2, 1, 1), 2), (3, (4, 2, 2, 1, 1, 1, 1), 4)],
)
def test_log_gap_spec(k, s, t):
    spec = log_gap_spec(k)
    assert spec.s == s and spec.t == t


def test_log_gap_hard_request(log_gap_two):
    construction, hard = log_gap_two
    assert hard.total == 4
    assert hard_request_best_ratio(construction, hard) == Fraction(1, 2)


def test_log_gap_cap():
    with pytest.raises(CapExceededError):
        build_log_gap_instance(4)


def test_hard_request_must_target_color_one(small_knapsack):
    with pytest.raises(BadRequestError):
        hard_request_best_ratio(small_knapsack, WeightedRequest(weights={(1, 2): 1}))


def test_all_ones_and_singletons(small_knapsack):
    assert all_ones_ratio(small_knapsack) == Fraction(1, 2)
    assert singleton_requests_satisfiable(small_knapsack)


# ==================== 满足请求 ====================
def test_quarter_satisfy(small_knapsack):
    lists = small_knapsack.lists
    s_vertices = set(small_knapsack.s_vertices)
    uniform = WeightedRequest(
        weights={(v, c): 1 for v, colors in lists.items() for c in colors if not (v in s_vertices and c == 1)}
    )
    phi = quarter_satisfy(small_knapsack, uniform)
    matched = sum(1 for (v, c) in uniform.weights if phi[v] == c)
    assert 4 * matched >= uniform.total

    y = sink_vertex(small_knapsack.spec)
    assert quarter_satisfy(small_knapsack, WeightedRequest(weights={(y, 1): 1}))[y] == 1
    quarter_satisfy(small_knapsack, WeightedRequest())

    with pytest.raises(BadRequestError):
        quarter_satisfy(small_knapsack, WeightedRequest(weights={(1, 1): 1}))


def test_split_satisfy_all_ones(small_knapsack):
    r = Request(entries={1: 1, 2: 1})
    phi = split_satisfy(small_knapsack, r)
    assert count_request_matches(r, phi) == 1


def test_split_satisfy_battery(log_gap_two):
    construction, _ = log_gap_two
    requests = random_requests(construction.graph, construction.list_assignment, seed=17, count=100)
    for r in requests:
        phi = split_satisfy(construction, r)
        assert 6 * count_request_matches(r, phi) >= len(r)
