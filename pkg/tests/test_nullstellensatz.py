from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from app.core.utils import NotDegenerateError, NotPrimeError, PreconditionViolatedError
from app.services.catalog import atlas_graphs
from app.services.coloring_engine import is_proper_L_coloring
from app.services.graph_core import Graph, ListAssignment, degeneracy
from app.services.nullstellensatz import (
    Bijection,
    BijectionKind,
    MonomialQuery,
    alon_tarsi_check,
    base_case_value,
    binomial_residue_holds,
    c_G_of_h_direct,
    c_G_of_h_exact_recursive,
    c_G_of_h_recursive,
    complete_to_maximal,
    count_signed_shiftable,
    graph_polynomial_coeff,
    maximal_degenerate_graphs,
    request_vectors,
    shift_condition,
    single_request_colorable,
    singleton_request_coloring,
    verify_claim1,
)
from tests.conftest import complete_graph, path_graph
from tests.strategies import graphs


def query(*exponents: int) -> MonomialQuery:
    return MonomialQuery(ordering=tuple(range(1, len(exponents) + 1)), exponents=exponents)


# ==================== 系数 ====================
def test_k2_coefficients():
    k2 = complete_graph(2)
    assert graph_polynomial_coeff(k2, query(0, 1)) == 1
    assert graph_polynomial_coeff(k2, query(1, 0)) == -1
    assert graph_polynomial_coeff(k2, query(1, 1)) == 0


def test_triangle_is_a_vandermonde_determinant():
    k3 = complete_graph(3)
    assert graph_polynomial_coeff(k3, query(0, 1, 2)) == 1
    assert graph_polynomial_coeff(k3, query(1, 0, 2)) == -1
    assert graph_polynomial_coeff(k3, query(1, 1, 1)) == 0


def test_variables_follow_the_ordering():
    # 变量按顶点在顺序中的位置编号
    reversed_order = MonomialQuery(ordering=(2, 1), exponents=(0, 1))
    assert graph_polynomial_coeff(complete_graph(2), reversed_order) == 1
    assert graph_polynomial_coeff(Graph(n=2, edges=[(2, 1)]), query(0, 1)) == 1


def test_query_validation():
    with pytest.raises(ValidationError):
        MonomialQuery(ordering=(1, 2), exponents=(1,))
    with pytest.raises(ValidationError):
        MonomialQuery(ordering=(1, 1), exponents=(1, 0))
    with pytest.raises(PreconditionViolatedError):
        graph_polynomial_coeff(complete_graph(3), query(1, 1))


def expand_by_orientation(g: Graph, exponents: tuple[int, ...]) -> int:
    """每条边独立选择 x_j 或 -x_i，累加落在目标单项式上的项"""
    edges = g.sorted_edges()
    total = 0
    for picks in product((0, 1), repeat=len(edges)):
        degree = [0] * g.n
        sign = 1
        for (i, j), pick in zip(edges, picks):
            if pick:
                degree[j - 1] += 1
            else:
                degree[i - 1] += 1
                sign = -sign
        if tuple(degree) == exponents:
            total += sign
    return total


@st.composite
def coefficient_cases(draw):
    g = draw(graphs(min_n=1, max_n=5).filter(lambda g: len(g.edges) <= 8))
    # 把边数随机分配到各顶点上
    exponents = [0] * g.n
    for _ in range(len(g.edges)):
        exponents[draw(st.integers(0, g.n - 1))] += 1
    return g, tuple(exponents)


@settings(max_examples=200, deadline=None)
@given(coefficient_cases())
def test_pruned_expansion_matches_brute_force(case):
    g, exponents = case
    assert graph_polynomial_coeff(g, query(*exponents)) == expand_by_orientation(g, exponents)


def test_alon_tarsi_check():
    k3 = complete_graph(3)
    assert alon_tarsi_check(k3, query(0, 1, 2), colors=3)
    assert alon_tarsi_check(k3, query(1, 1, 1), colors=3)
    assert alon_tarsi_check(path_graph(3), query(0, 1, 1), colors=4)


# ==================== 平移引理 ====================
def test_shift_condition():
    assert shift_condition(Bijection(values=(0, 1), kind=BijectionKind.SHIFTED), (2, 0))
    assert not shift_condition(Bijection(values=(1, 0), kind=BijectionKind.SHIFTED), (2, 0))
    assert shift_condition(Bijection(values=(0, 1), kind=BijectionKind.SHIFTED), (1, 1))
    with pytest.raises(PreconditionViolatedError):
        shift_condition(Bijection(values=(1, 2), kind=BijectionKind.PERMUTATION), (1, 1))
    with pytest.raises(PreconditionViolatedError):
        shift_condition(Bijection(values=(0, 1), kind=BijectionKind.SHIFTED), (1, 0))


def test_bijection_validation():
    with pytest.raises(ValidationError):
        Bijection(values=(1, 1), kind=BijectionKind.SHIFTED)
    with pytest.raises(ValidationError):
        Bijection(values=(0, 1), kind=BijectionKind.PERMUTATION)


@pytest.mark.parametrize(
    "d, r, expected",
    [(2, (2, 0), (1, -1)), (2, (1, 1), (2, 1)), (4, (4, 0, 0, 0), (6, -1))],
)
def test_count_signed_shiftable(d, r, expected):
    assert count_signed_shiftable(d, r) == expected


def shiftable_sweep(max_d: int) -> None:
    for d in range(1, max_d + 1):
        for r in request_vectors(d, d):
            count, sign = count_signed_shiftable(d, r)
            assert sign == (-1) ** (sum(1 for x in r if x) + d)
            for values in product(range(d), repeat=d):
                if sorted(values) != list(range(d)):
                    continue
                pi = Bijection(values=values, kind=BijectionKind.SHIFTED)
                shift_condition(pi, r)
            assert base_case_value(r) == count * sign


def test_shiftable_exhaustive():
    shiftable_sweep(4)


@pytest.mark.slow
def test_shiftable_exhaustive_full():
    shiftable_sweep(6)


# ==================== 极大 d-退化图 ====================
def test_complete_to_maximal():
    g, ordering = complete_to_maximal(complete_graph(3), 2)
    assert ordering == (1, 2, 3)
    assert g.sorted_edges() == [(1, 2), (1, 3), (2, 3)]
    g, ordering = complete_to_maximal(Graph(n=3), 1)
    assert ordering == (1, 2, 3)
    assert g.sorted_edges() == [(1, 2), (1, 3)]
    assert complete_to_maximal(path_graph(3), 1)[0].sorted_edges() == [(1, 2), (2, 3)]


def test_complete_to_maximal_errors():
    with pytest.raises(NotDegenerateError):
        complete_to_maximal(complete_graph(4), 2)
    with pytest.raises(PreconditionViolatedError):
        complete_to_maximal(path_graph(3), 0)


@settings(max_examples=100, deadline=None)
@given(graphs(min_n=3, max_n=7))
def test_completion_keeps_degeneracy(g):
    d = max(degeneracy(g).d, 1)
    completed, _ = complete_to_maximal(g, d)
    assert set(g.edges) <= set(completed.edges)
    assert len(completed.edges) == d * (d - 1) // 2 + (g.n - d) * d


def test_maximal_graph_counts():
    assert sum(1 for _ in maximal_degenerate_graphs(2, 5)) == 18
    assert list(request_vectors(2, 2)) == [(2, 0), (1, 1), (0, 2)]


# ==================== c_G(h) ====================
def test_c_g_on_k2():
    k2 = complete_graph(2)
    assert c_G_of_h_direct(k2, (1, 2), (2, 0), 2) == -1
    assert c_G_of_h_direct(k2, (1, 2), (1, 1), 2) == 2
    assert c_G_of_h_exact_recursive(k2, (1, 2), (1, 1), 2) == 2
    assert c_G_of_h_recursive(k2, (1, 2), (0, 2), 2) == 2


def test_c_g_on_k5():
    assert c_G_of_h_recursive(complete_graph(5), (1, 2, 3, 4, 5), (4, 0, 0, 0, 0), 4) == 4


def test_c_g_requires_prime():
    with pytest.raises(NotPrimeError):
        c_G_of_h_recursive(complete_graph(3), (1, 2, 3), (3, 0, 0), 3)


def test_c_g_requires_maximal_structure():
    with pytest.raises(PreconditionViolatedError):
        c_G_of_h_direct(path_graph(3), (1, 2, 3), (2, 0, 0), 2)


def test_verify_claim1():
    report = verify_claim1(2, 5)
    assert report.prime
    assert report.graphs_checked == 23
    assert report.cases_checked == 309
    assert report.residues == [2]
    assert report.all_minus_one and report.recursive_agrees


def test_verify_claim1_composite():
    report = verify_claim1(3, 4)
    assert not report.prime
    assert report.graphs_checked == 2
    assert report.cases_checked == 30


@pytest.mark.slow
def test_verify_claim1_full():
    assert verify_claim1(2, 6).all_minus_one
    assert verify_claim1(4, 6).all_minus_one


# ==================== 单请求可着色性 ====================
def test_single_request_colorable():
    k3 = complete_graph(3)
    lists = ListAssignment.from_sequence([{1}, {1, 2, 3}, {1, 2, 3}])
    phi = single_request_colorable(k3, lists, 2, (2, 0, 0))
    assert phi[1] == 1 and is_proper_L_coloring(k3, lists, phi)
    short = ListAssignment.from_sequence([{1}, {1, 2}, {1, 2, 3}])
    with pytest.raises(PreconditionViolatedError):
        single_request_colorable(k3, short, 2, (2, 0, 0))
    with pytest.raises(PreconditionViolatedError):
        single_request_colorable(k3, lists, 3, (3, 0, 0))


def singleton_sweep(max_n: int) -> None:
    for g in atlas_graphs(max_n, connected=True):
        if degeneracy(g).d > 2:
            continue
        lists = ListAssignment.uniform(g.n, [1, 2, 3])
        for v in g.vertices:
            for c in (1, 2, 3):
                phi = singleton_request_coloring(g, lists, 2, v, c)
                assert phi[v] == c and is_proper_L_coloring(g, lists, phi)


def test_singleton_requests():
    singleton_sweep(4)


@pytest.mark.slow
def test_singleton_requests_full():
    singleton_sweep(6)


def test_binomial_residue():
    assert binomial_residue_holds(2)
    assert binomial_residue_holds(4)
    assert binomial_residue_holds(6)
    assert not binomial_residue_holds(3)
