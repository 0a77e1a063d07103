"""
图多项式与系数计算

提供：
1. 图多项式 p_G = Π_{i<j, v_i v_j ∈ E} (x_j - x_i) 的单项式系数（带剪枝的稀疏展开）
2. 双射 S_d / S⁰_d、符号与平移条件 π(t) = Σ_{j: π(j)<π(t)} r(j)
3. 补全为极大 d-退化图，以及 c_G(h) 的直接计算与按顶点递归的计算
4. 单请求可着色性：d+1 为素数时 |L(v_i)| ≥ d+1-r(i) 的列表必可着色
"""

import logging
from collections.abc import Iterator
from enum import Enum
from functools import lru_cache
from itertools import combinations, permutations, product
from math import comb, factorial, prod

from pydantic import BaseModel, ConfigDict, model_validator

from app.core.config import settings
from app.core.utils import (
    InternalError,
    NotDegenerateError,
    NotPrimeError,
    PreconditionViolatedError,
    check_cap,
    is_prime,
)
from app.services.coloring_engine import solve_domains
from app.services.graph_core import Coloring, Graph, ListAssignment, degeneracy

logger = logging.getLogger(__name__)


# ==================== 数据模型 ====================
class BijectionKind(str, Enum):
    PERMUTATION = "S"  # {1..d} -> {1..d}
    SHIFTED = "S0"  # {1..d} -> {0..d-1}


class Bijection(BaseModel):
    model_config = ConfigDict(frozen=True)

    values: tuple[int, ...]
    kind: BijectionKind

    @model_validator(mode="after")
    def _check_bijective(self) -> "Bijection":
        d = len(self.values)
        start = 1 if self.kind == BijectionKind.PERMUTATION else 0
        if sorted(self.values) != list(range(start, start + d)):
            raise ValueError(f"{self.values} 不是到 {{{start}..{start + d - 1}}} 的双射")
        return self

    @property
    def d(self) -> int:
        return len(self.values)


class MonomialQuery(BaseModel):
    """顶点顺序与按该顺序对齐的指数向量"""

    model_config = ConfigDict(frozen=True)

    ordering: tuple[int, ...]
    exponents: tuple[int, ...]

    @model_validator(mode="after")
    def _check_shape(self) -> "MonomialQuery":
        if len(self.ordering) != len(self.exponents):
            raise ValueError("顶点顺序与指数向量长度不一致")
        if len(set(self.ordering)) != len(self.ordering):
            raise ValueError("顶点顺序含重复顶点")
        if any(e < 0 for e in self.exponents):
            raise ValueError("指数必须非负")
        return self


class ClaimReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int
    max_n: int
    prime: bool
    graphs_checked: int
    cases_checked: int
    residues: list[int]
    all_minus_one: bool
    recursive_agrees: bool


def sign(values: tuple[int, ...] | Bijection) -> int:
    """(-1)^{逆序数}"""
    if isinstance(values, Bijection):
        values = values.values
    inversions = sum(1 for i, j in combinations(range(len(values)), 2) if values[i] > values[j])
    return -1 if inversions % 2 else 1


def _check_request_vector(r: tuple[int, ...], d: int) -> None:
    if any(x < 0 for x in r):
        raise PreconditionViolatedError("请求向量的分量必须非负")
    if sum(r) != d:
        raise PreconditionViolatedError(f"请求向量之和为 {sum(r)}，应为 d={d}")


# ==================== 系数提取 ====================
def graph_polynomial_coeff(g: Graph, q: MonomialQuery, cap: int | None = None) -> int:
    """
    计算 p_G 中 Π x_i^{e_i} 的系数（按 q.ordering 的位置编号变量）。

    逐条边乘入二项式 (x_j - x_i)，丢弃某个指数已超过目标、
    或剩余关联边不足以达到目标的项。

    Raises:
        CapExceededError: Π(e_i + 1) 超过上限
    """
    if set(q.ordering) != set(g.vertices):
        raise PreconditionViolatedError("顶点顺序必须恰好覆盖图的所有顶点")
    target = q.exponents
    check_cap(prod(e + 1 for e in target), settings.COEFF_MONOMIAL_CAP if cap is None else cap, "系数展开")
    if sum(target) != len(g.edges):
        return 0

    position = {v: i for i, v in enumerate(q.ordering)}
    edges = sorted((min(position[u], position[v]), max(position[u], position[v])) for u, v in g.edges)
    remaining = [0] * len(target)
    for i, j in edges:
        remaining[i] += 1
        remaining[j] += 1
    if any(remaining[i] < target[i] for i in range(len(target))):
        return 0

    terms: dict[tuple[int, ...], int] = {tuple([0] * len(target)): 1}
    for i, j in edges:
        remaining[i] -= 1
        remaining[j] -= 1
        expanded: dict[tuple[int, ...], int] = {}
        for exponents, coeff in terms.items():
            # (x_j - x_i)：x_j 取 +1，x_i 取 -1
            for bump, factor in ((j, coeff), (i, -coeff)):
                other = i if bump == j else j
                if exponents[bump] + 1 > target[bump]:
                    continue
                if exponents[other] + remaining[other] < target[other]:
                    continue
                if exponents[bump] + 1 + remaining[bump] < target[bump]:
                    continue
                key = exponents[:bump] + (exponents[bump] + 1,) + exponents[bump + 1:]
                expanded[key] = expanded.get(key, 0) + factor
        terms = {key: value for key, value in expanded.items() if value}
        if not terms:
            return 0
    return terms.get(target, 0)


# ==================== 平移引理 ====================
def shift_condition(pi: Bijection, r: tuple[int, ...]) -> bool:
    """
    判断 π(t) = Σ_{j: π(j)<π(t)} r(j) 是否对所有 r(t) > 0 的 t 成立，
    同时独立判断 π + r ∈ S_d，两者必须一致。

    Raises:
        InternalError: 两种判定结果不一致
    """
    if pi.kind != BijectionKind.SHIFTED:
        raise PreconditionViolatedError("π 必须属于 S⁰_d")
    d = pi.d
    if len(r) != d:
        raise PreconditionViolatedError(f"请求向量长度应为 d={d}")
    _check_request_vector(r, d)
    values = pi.values
    condition = all(
        values[t] == sum(r[j] for j in range(d) if values[j] < values[t])
        for t in range(d)
        if r[t] > 0
    )
    shifted = sorted(p + x for p, x in zip(values, r)) == list(range(1, d + 1))
    if condition != shifted:
        raise InternalError(f"平移条件与 π+r ∈ S_d 的判定不一致: π={values}, r={r}")
    return condition


def count_signed_shiftable(d: int, r: tuple[int, ...]) -> tuple[int, int]:
    """
    枚举满足 π + r ∈ S_d 的 π ∈ S⁰_d。

    断言个数为 k!(d-k)!（k 为 r 的支撑大小），且每个 sgn(π)sgn(π+r) 都等于 (-1)^{k+d}。

    Returns:
        tuple[int, int]: (个数, 符号乘积)
    """
    check_cap(d, settings.NULL_MAX_D, "置换枚举的 d")
    if len(r) != d:
        raise PreconditionViolatedError(f"请求向量长度应为 d={d}")
    _check_request_vector(r, d)
    k = sum(1 for x in r if x > 0)
    expected_sign = (-1) ** (k + d)
    count = 0
    for values in permutations(range(d)):
        moved = tuple(p + x for p, x in zip(values, r))
        if sorted(moved) != list(range(1, d + 1)):
            continue
        count += 1
        product_sign = sign(values) * sign(moved)
        if product_sign != expected_sign:
            raise InternalError(f"π={values} 的符号乘积为 {product_sign}，应为 {expected_sign}")
    if count != factorial(k) * factorial(d - k):
        raise InternalError(f"可平移双射个数 {count} 不等于 k!(d-k)!={factorial(k) * factorial(d - k)}")
    return count, expected_sign


# ==================== 极大 d-退化图 ====================
def complete_to_maximal(g: Graph, d: int) -> tuple[Graph, tuple[int, ...]]:
    """
    把 d-退化图补全为极大 d-退化图。

    反复删除度数 ≤ d 的编号最大的顶点，删除序的逆序作为顶点顺序；
    前 d 个顶点补成团，之后每个顶点补足恰好 d 个在前的邻居（优先位置靠前者）。

    Raises:
        NotDegenerateError: g 不是 d-退化的
    """
    if d < 1:
        raise PreconditionViolatedError(f"d 必须为正整数，收到 {d}")
    if g.n < d:
        raise PreconditionViolatedError(f"顶点数 {g.n} 小于 d={d}")
    if degeneracy(g).d > d:
        raise NotDegenerateError(f"图不是 {d}-退化的")

    adj = {v: set(nbrs) for v, nbrs in g.adjacency.items()}
    removal: list[int] = []
    while adj:
        v = max(u for u in adj if len(adj[u]) <= d)
        for u in adj[v]:
            adj[u].discard(v)
        del adj[v]
        removal.append(v)
    ordering = tuple(reversed(removal))

    edges = set(g.edges)
    for i, v in enumerate(ordering):
        earlier = ordering[:i]
        if i < d:
            wanted = list(earlier)
        else:
            back = [u for u in earlier if (min(u, v), max(u, v)) in edges]
            extra = [u for u in earlier if u not in back][: d - len(back)]
            wanted = back + extra
        for u in wanted:
            edges.add((min(u, v), max(u, v)))
    return Graph(n=g.n, edges=sorted(edges)), ordering


def maximal_degenerate_graphs(d: int, n: int) -> Iterator[tuple[Graph, tuple[int, ...]]]:
    """
    生成顶点 1..n 上全部带标号的极大 d-退化构造：
    1..d 为团，之后每个顶点在更小的顶点中选恰好 d 个邻居。
    """
    if n < d:
        return
    base = [(u, v) for u, v in combinations(range(1, d + 1), 2)]
    choices = [list(combinations(range(1, i), d)) for i in range(d + 1, n + 1)]
    ordering = tuple(range(1, n + 1))
    for picks in product(*choices):
        edges = list(base)
        for i, back in zip(range(d + 1, n + 1), picks):
            edges.extend((u, i) for u in back)
        yield Graph(n=n, edges=edges), ordering


def request_vectors(n: int, d: int) -> Iterator[tuple[int, ...]]:
    """长度为 n、分量非负、和为 d 的全部向量（字典序降序）"""
    if n == 0:
        if d == 0:
            yield ()
        return
    for first in range(d, -1, -1):
        for rest in request_vectors(n - 1, d - first):
            yield (first,) + rest


# ==================== c_G(h) ====================
def _check_maximal(g: Graph, ordering: tuple[int, ...], d: int) -> None:
    if sorted(ordering) != list(g.vertices):
        raise PreconditionViolatedError("顶点顺序必须是 1..n 的排列")
    if g.n < d:
        raise PreconditionViolatedError(f"极大 d-退化图至少有 d={d} 个顶点")
    position = {v: i for i, v in enumerate(ordering)}
    for i, v in enumerate(ordering):
        back = sum(1 for u in g.adjacency[v] if position[u] < i)
        if back != min(i, d):
            raise PreconditionViolatedError(f"顶点 {v} 有 {back} 个在前的邻居，不符合极大 d-退化结构")


def c_G_of_h_direct(g: Graph, ordering: tuple[int, ...], r: tuple[int, ...], d: int) -> int:
    """
    直接计算 c_G(h) = Σ_{σ∈S_d} sgn(σ) c_G(h,σ)。

    c_G(h,σ) 为 p_G 中 (1/h) Π_{i≤d} x_i^{σ(i)} Π_{i>d} x_i^d 的系数；
    出现负指数时系数为零，不调用展开。

    Args:
        r: 按 ordering 的位置对齐的请求向量
    """
    check_cap(g.n, settings.NULL_MAX_VERTICES, "c_G(h) 的顶点数")
    check_cap(d, settings.NULL_MAX_D, "c_G(h) 的 d")
    _check_maximal(g, ordering, d)
    if len(r) != g.n:
        raise PreconditionViolatedError("请求向量长度应等于顶点数")
    _check_request_vector(r, d)
    total = 0
    for sigma in permutations(range(1, d + 1)):
        exponents = [s - x for s, x in zip(sigma, r[:d])] + [d - x for x in r[d:]]
        if min(exponents) < 0:
            continue
        total += sign(sigma) * graph_polynomial_coeff(
            g, MonomialQuery(ordering=ordering, exponents=tuple(exponents))
        )
    return total


def base_case_value(r: tuple[int, ...]) -> int:
    """团 K_d 上的 c_G(h) = Σ_{π∈S⁰_d, π+r∈S_d} sgn(π) sgn(π+r)"""
    d = len(r)
    total = 0
    for values in permutations(range(d)):
        moved = tuple(p + x for p, x in zip(values, r))
        if sorted(moved) == list(range(1, d + 1)):
            total += sign(values) * sign(moved)
    return total


def c_G_of_h_exact_recursive(g: Graph, ordering: tuple[int, ...], r: tuple[int, ...], d: int) -> int:
    """
    按顶点递归计算 c_G(h)：删去最后一个顶点 v_n，
    c_G(h) = (-1)^{r(n)} Σ_{|S|=r(n)} c_H(h_S)，其中 h_S 把 v_n 的请求转移到 S 中的邻居上。
    """
    _check_maximal(g, ordering, d)
    if len(r) != g.n:
        raise PreconditionViolatedError("请求向量长度应等于顶点数")
    _check_request_vector(r, d)
    position = {v: i for i, v in enumerate(ordering)}
    back_neighbors = tuple(
        tuple(sorted(position[u] for u in g.adjacency[v] if position[u] < i))
        for i, v in enumerate(ordering)
    )

    @lru_cache(maxsize=None)
    def value(length: int, vector: tuple[int, ...]) -> int:
        if length == d:
            return base_case_value(vector)
        last = vector[-1]
        head = vector[:-1]
        total = 0
        for chosen in combinations(back_neighbors[length - 1], last):
            shifted = list(head)
            for index in chosen:
                shifted[index] += 1
            total += value(length - 1, tuple(shifted))
        return (-1) ** last * total

    return value(g.n, tuple(r))


def c_G_of_h_recursive(g: Graph, ordering: tuple[int, ...], r: tuple[int, ...], d: int) -> int:
    """
    递归计算 c_G(h) 模 d+1 的余数，并断言它等于 d（即 -1）。

    Raises:
        NotPrimeError: d+1 不是素数
        InternalError: 余数不等于 d
    """
    if not is_prime(d + 1):
        raise NotPrimeError(f"d+1={d + 1} 不是素数")
    residue = c_G_of_h_exact_recursive(g, ordering, r, d) % (d + 1)
    if residue != d:
        raise InternalError(f"c_G(h) ≡ {residue} (mod {d + 1})，应为 -1", {"r": list(r)})
    return residue


def verify_claim1(d: int, max_n: int, min_n: int | None = None) -> ClaimReport:
    """
    在全部极大 d-退化构造（d ≤ n ≤ max_n）和全部请求向量上比较直接计算与递归计算。

    d+1 为素数时断言余数恒为 -1；否则只报告余数。
    """
    prime = is_prime(d + 1)
    graphs = cases = 0
    residues: set[int] = set()
    all_minus_one = recursive_agrees = True
    for n in range(max(d, min_n or d), max_n + 1):
        for g, ordering in maximal_degenerate_graphs(d, n):
            graphs += 1
            for r in request_vectors(n, d):
                cases += 1
                direct = c_G_of_h_direct(g, ordering, r, d)
                residue = direct % (d + 1)
                residues.add(residue)
                all_minus_one &= residue == d
                if direct != c_G_of_h_exact_recursive(g, ordering, r, d):
                    recursive_agrees = False
                    logger.warning(f"直接计算与递归计算不一致: n={n}, r={r}, 边={g.sorted_edges()}")
                if prime and residue != d:
                    raise InternalError(f"c_G(h) ≡ {residue} (mod {d + 1})", {"r": list(r), "n": n})
        logger.info(f"d={d}, n={n}: 累计 {graphs} 个图, {cases} 个情形")
    if prime and not recursive_agrees:
        raise InternalError("直接计算与递归计算不一致")
    return ClaimReport(
        d=d,
        max_n=max_n,
        prime=prime,
        graphs_checked=graphs,
        cases_checked=cases,
        residues=sorted(residues),
        all_minus_one=all_minus_one,
        recursive_agrees=recursive_agrees,
    )


# ==================== 可着色性 ====================
def alon_tarsi_check(g: Graph, q: MonomialQuery, colors: int) -> bool:
    """
    系数非零时，穷举 |L(v_i)| = e_i + 1 的全部列表（颜色取自 1..colors），检查都可着色。

    Returns:
        bool: 系数为零，或全部列表都可着色
    """
    if graph_polynomial_coeff(g, q) == 0:
        return True
    palette = range(1, colors + 1)
    per_vertex = [list(combinations(palette, e + 1)) for e in q.exponents]
    check_cap(prod(len(options) for options in per_vertex), settings.COLORING_ENUMERATION_CAP, "列表分配枚举")
    adj = g.adjacency
    for choice in product(*per_vertex):
        domains = {v: frozenset(colors_) for v, colors_ in zip(q.ordering, choice)}
        if solve_domains(adj, domains) is None:
            logger.warning(f"系数非零但列表 {domains} 不可着色")
            return False
    return True


def single_request_colorable(
    g: Graph, lists: ListAssignment, d: int, r: tuple[int, ...]
) -> Coloring:
    """
    d+1 为素数、G 为 d-退化、|L(v_i)| ≥ d+1-r(i) 且 Σ r = d 时给出 L-着色。

    Args:
        r: 按顶点 1..n 对齐的请求向量

    Raises:
        PreconditionViolatedError: 任一前提不成立
        InternalError: 搜索失败
    """
    lists.check_against(g)
    if d < 2 or not is_prime(d + 1):
        raise PreconditionViolatedError(f"要求 d ≥ 2 且 d+1 为素数，收到 d={d}")
    if len(r) != g.n:
        raise PreconditionViolatedError("请求向量长度应等于顶点数")
    _check_request_vector(r, d)
    if degeneracy(g).d > d:
        raise PreconditionViolatedError(f"图不是 {d}-退化的")
    for v, x in zip(g.vertices, r):
        if len(lists[v]) < d + 1 - x:
            raise PreconditionViolatedError(f"|L({v})| = {len(lists[v])} 小于 d+1-r({v}) = {d + 1 - x}")
    found = solve_domains(g.adjacency, dict(lists.lists))
    if found is None:
        raise InternalError("满足前提的列表分配不可着色", {"r": list(r)})
    return Coloring(colors=dict(sorted(found.items())))


def singleton_request_coloring(g: Graph, lists: ListAssignment, d: int, v: int, c: int) -> Coloring:
    """单点请求 {v → c}：令 L'(v) = {c}、r(v) = d 后调用 single_request_colorable"""
    lists.check_against(g)
    if c not in lists[v]:
        raise PreconditionViolatedError(f"颜色 {c} 不在 L({v}) 中")
    narrowed = ListAssignment(lists={**lists.lists, v: frozenset({c})})
    r = tuple(d if u == v else 0 for u in g.vertices)
    return single_request_colorable(g, narrowed, d, r)


def binomial_residue_holds(d: int) -> bool:
    """d+1 为素数时 C(d,k) ≡ (-1)^k (mod d+1) 对所有 k 成立"""
    return all((comb(d, k) - (-1) ** k) % (d + 1) == 0 for k in range(d + 1))
