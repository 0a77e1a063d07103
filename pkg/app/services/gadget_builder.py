"""
背包小工具构造

提供：
1. (u,v)→w 蕴含小工具：u、v 都着色 1 时 w 必须着色 1
2. 把背包实例 (s_1..s_n, t) 编译成列表大小为 3 的图
3. 四个规范着色 φ1..φ4，可实现集合的判定，以及对数间隙实例
4. 1/4-满足（S 上不请求颜色 1 的加权请求）与 r1/r2 拆分的 1/6-满足

顶点编号：S 为 1..n，之后按行优先排列 x_{i,j}，然后是 y，最后按添加顺序排列小工具顶点。
"""

import logging
from enum import Enum
from fractions import Fraction
from functools import cached_property
from itertools import combinations, product
from math import ceil

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.config import settings
from app.core.utils import (
    BadEndpointListError,
    BadRequestError,
    InternalError,
    PreconditionViolatedError,
    check_cap,
)
from app.services.coloring_engine import (
    ColoringConstraint,
    count_request_matches,
    is_proper_L_coloring,
    matched_weight,
    solve_domains,
)
from app.services.graph_core import Coloring, Graph, ListAssignment, Request, WeightedRequest

logger = logging.getLogger(__name__)

S_LIST = frozenset({1, 2, 3})
MACHINE_LIST = frozenset({1, 4, 5})
TRIANGLE_LIST = frozenset({1, 6, 7})
ENDPOINT_LISTS = (S_LIST, MACHINE_LIST)

# 规范着色表：(S, x, y, (a)(b)(c) 小工具的 z1..z5, (d) 小工具的 z1..z5)
CANONICAL_TABLE: dict[int, tuple[int, int, int, tuple[int, ...], tuple[int, ...]]] = {
    1: (2, 1, 4, (6, 7, 1, 4, 5), (1, 6, 7, 1, 5)),
    2: (3, 1, 5, (7, 6, 1, 5, 4), (1, 7, 6, 4, 1)),
    3: (3, 4, 1, (1, 6, 7, 1, 5), (6, 1, 7, 5, 4)),
    4: (3, 5, 1, (7, 1, 6, 4, 1), (7, 6, 1, 4, 5)),
}


# ==================== 数据模型 ====================
class KnapsackSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: tuple[int, ...] = Field(min_length=1)
    t: int = Field(ge=1)

    @field_validator("s")
    @classmethod
    def _check_sizes(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if any(x < 1 for x in value):
            raise ValueError("所有 s_i 必须为正整数")
        return value

    @property
    def n(self) -> int:
        return len(self.s)


class RoleKind(str, Enum):
    S_VERTEX = "s"
    MACHINE = "x"
    SINK = "y"
    GADGET = "z"
    ENDPOINT = "endpoint"


class VertexRole(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: RoleKind
    index: tuple[int, ...] = ()
    gadget: int | None = None
    step: str | None = None

    def label(self) -> str:
        if self.kind == RoleKind.S_VERTEX:
            return f"v{self.index[0]}"
        if self.kind == RoleKind.MACHINE:
            return f"x{self.index[0]},{self.index[1]}"
        if self.kind == RoleKind.SINK:
            return "y"
        if self.kind == RoleKind.GADGET:
            step = f"({self.step})" if self.step else ""
            return f"z{self.index[0]} gadget{self.gadget}{step}"
        return f"endpoint{self.index[0]}" if self.index else "endpoint"


class GadgetRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    gadget_id: int
    step: str | None
    u: int
    v: int
    w: int
    z: tuple[int, int, int, int, int]


class GadgetConstruction(BaseModel):
    """构造结果：图、列表、S 以及每个顶点的角色"""

    model_config = ConfigDict(frozen=True)

    n_vertices: int = 0
    edges: tuple[tuple[int, int], ...] = ()
    lists: dict[int, frozenset[int]] = Field(default_factory=dict)
    s_vertices: tuple[int, ...] = ()
    roles: dict[int, VertexRole] = Field(default_factory=dict)
    gadgets: tuple[GadgetRecord, ...] = ()
    spec: KnapsackSpec | None = None

    @cached_property
    def graph(self) -> Graph:
        return Graph(n=self.n_vertices, edges=list(self.edges))

    @cached_property
    def list_assignment(self) -> ListAssignment:
        return ListAssignment(lists=self.lists)

    def evolve(self, **changes) -> "GadgetConstruction":
        """返回修改了若干字段的新构造（不复制已缓存的 graph）"""
        fields = {name: getattr(self, name) for name in type(self).model_fields}
        return type(self).model_construct(**(fields | changes))

    def add_vertex(self, colors: frozenset[int], role: VertexRole) -> tuple["GadgetConstruction", int]:
        vertex = self.n_vertices + 1
        updated = self.evolve(
            n_vertices=vertex,
            lists={**self.lists, vertex: colors},
            roles={**self.roles, vertex: role},
        )
        return updated, vertex


# ==================== 小工具 ====================
def attach_gadget(
    construction: GadgetConstruction, u: int, v: int, w: int, step: str | None = None
) -> GadgetConstruction:
    """
    添加 (u,v)→w 小工具。

    新增 z1..z5：三角形 z1z2z3 与 z3z4z5，边 uz1、vz2、wz4、wz5；
    L(z1)=L(z2)=L(z3)={1,6,7}，L(z4)=L(z5)=L(w)。u 与 v 可以是同一个顶点。

    Raises:
        BadEndpointListError: 端点列表不是 {1,2,3} 或 {1,4,5}
    """
    for endpoint in (u, v, w):
        if construction.lists.get(endpoint) not in ENDPOINT_LISTS:
            raise BadEndpointListError(
                f"端点 {endpoint} 的列表必须是 {{1,2,3}} 或 {{1,4,5}}",
                {"vertex": endpoint},
            )
    gadget_id = len(construction.gadgets) + 1
    base = construction.n_vertices
    z = tuple(range(base + 1, base + 6))
    z1, z2, z3, z4, z5 = z
    new_edges = [(z1, z2), (z2, z3), (z1, z3), (z3, z4), (z4, z5), (z3, z5), (u, z1), (v, z2), (w, z4), (w, z5)]
    lists = dict(construction.lists)
    roles = dict(construction.roles)
    for position, vertex in enumerate(z, start=1):
        lists[vertex] = TRIANGLE_LIST if position <= 3 else construction.lists[w]
        roles[vertex] = VertexRole(kind=RoleKind.GADGET, index=(position,), gadget=gadget_id, step=step)
    record = GadgetRecord(gadget_id=gadget_id, step=step, u=u, v=v, w=w, z=z)
    return construction.evolve(
        n_vertices=base + 5,
        edges=construction.edges + tuple((min(a, b), max(a, b)) for a, b in new_edges),
        lists=lists,
        roles=roles,
        gadgets=construction.gadgets + (record,),
    )


def gadget_extension_table(
    u_list: frozenset[int], v_list: frozenset[int], w_list: frozenset[int], same_uv: bool = False
) -> dict[tuple[int, int, int], bool]:
    """
    穷举端点着色，判断每一种能否扩展到小工具内部。

    Returns:
        dict: (c_u, c_v, c_w) -> 是否可扩展；same_uv 时 c_u == c_v
    """
    construction = GadgetConstruction()
    construction, u = construction.add_vertex(u_list, VertexRole(kind=RoleKind.ENDPOINT, index=(1,)))
    if same_uv:
        v = u
    else:
        construction, v = construction.add_vertex(v_list, VertexRole(kind=RoleKind.ENDPOINT, index=(2,)))
    construction, w = construction.add_vertex(w_list, VertexRole(kind=RoleKind.ENDPOINT, index=(3,)))
    construction = attach_gadget(construction, u, v, w)
    adj = construction.graph.adjacency

    table: dict[tuple[int, int, int], bool] = {}
    for cu, cv, cw in product(sorted(u_list), sorted(u_list if same_uv else v_list), sorted(w_list)):
        if same_uv and cu != cv:
            continue
        domains = dict(construction.lists)
        domains[u] = frozenset({cu})
        domains[v] = frozenset({cv})
        domains[w] = frozenset({cw})
        table[(cu, cv, cw)] = solve_domains(adj, domains) is not None
    return table


# ==================== 背包图 ====================
def machine_vertex(spec: KnapsackSpec, i: int, j: int) -> int:
    """x_{i,j} 的编号"""
    return spec.n + (i - 1) * (spec.t + 1) + j + 1


def sink_vertex(spec: KnapsackSpec) -> int:
    return spec.n + spec.n * (spec.t + 1) + 1


def build_knapsack_graph(spec: KnapsackSpec) -> GadgetConstruction:
    """
    按 (a)-(d) 四步构造背包图。

    (a) 1≤i≤n：(v_i,v_i)→x_{1,0}
    (b) 1≤i≤n-1, 0≤j≤t：(x_{i,j},x_{i,j})→x_{i+1,j}
    (c) 1≤i≤n-1, 0≤j≤t-s_i：(v_i,x_{i,j})→x_{i+1,j+s_i}
    (d) 1≤i≤n, t-s_i+1≤j≤t：(v_i,x_{i,j})→y

    Returns:
        GadgetConstruction: |V| < 11n(t+2)
    """
    n, t = spec.n, spec.t
    construction = GadgetConstruction(spec=spec)
    for i in range(1, n + 1):
        construction, _ = construction.add_vertex(S_LIST, VertexRole(kind=RoleKind.S_VERTEX, index=(i,)))
    for i in range(1, n + 1):
        for j in range(t + 1):
            construction, _ = construction.add_vertex(
                MACHINE_LIST, VertexRole(kind=RoleKind.MACHINE, index=(i, j))
            )
    construction, y = construction.add_vertex(MACHINE_LIST, VertexRole(kind=RoleKind.SINK))
    construction = construction.evolve(
        s_vertices=tuple(range(1, n + 1)),
        edges=((machine_vertex(spec, 1, 0), y),),
    )

    def x(i: int, j: int) -> int:
        return machine_vertex(spec, i, j)

    for i in range(1, n + 1):
        construction = attach_gadget(construction, i, i, x(1, 0), step="a")
    for i in range(1, n):
        for j in range(t + 1):
            construction = attach_gadget(construction, x(i, j), x(i, j), x(i + 1, j), step="b")
    for i in range(1, n):
        for j in range(t - spec.s[i - 1] + 1):
            construction = attach_gadget(construction, i, x(i, j), x(i + 1, j + spec.s[i - 1]), step="c")
    for i in range(1, n + 1):
        for j in range(max(0, t - spec.s[i - 1] + 1), t + 1):
            construction = attach_gadget(construction, i, x(i, j), y, step="d")

    limit = 11 * n * (t + 2)
    if construction.n_vertices >= limit:
        raise InternalError(f"构造出 {construction.n_vertices} 个顶点，不小于 11n(t+2)={limit}")
    logger.info(
        f"背包图构造完成: s={spec.s}, t={t}, {construction.n_vertices} 个顶点, "
        f"{len(construction.gadgets)} 个小工具"
    )
    return construction


def _require_knapsack(construction: GadgetConstruction) -> KnapsackSpec:
    if construction.spec is None:
        raise PreconditionViolatedError("该构造不是由背包实例生成的")
    return construction.spec


def canonical_coloring(construction: GadgetConstruction, index: int) -> Coloring:
    """
    规范着色 φ_index（index ∈ {1,2,3,4}），并断言它是正常的 L-着色。
    """
    if index not in CANONICAL_TABLE:
        raise PreconditionViolatedError(f"规范着色的编号必须在 1..4 中，收到 {index}")
    _require_knapsack(construction)
    s_color, x_color, y_color, abc_colors, d_colors = CANONICAL_TABLE[index]
    colors: dict[int, int] = {}
    for vertex, role in construction.roles.items():
        if role.kind == RoleKind.S_VERTEX:
            colors[vertex] = s_color
        elif role.kind == RoleKind.MACHINE:
            colors[vertex] = x_color
        elif role.kind == RoleKind.SINK:
            colors[vertex] = y_color
    for record in construction.gadgets:
        pattern = d_colors if record.step == "d" else abc_colors
        colors.update(zip(record.z, pattern))
    phi = Coloring(colors=dict(sorted(colors.items())))
    if not is_proper_L_coloring(construction.graph, construction.list_assignment, phi):
        raise InternalError(f"规范着色 φ{index} 不是正常的 L-着色")
    return phi


# ==================== 可实现集合 ====================
def realization_constraint(construction: GadgetConstruction, subset: frozenset[int]) -> ColoringConstraint:
    """R 内的 v_i 强制着色 1，R 外的 v_i 禁用颜色 1"""
    forced = {}
    forbidden = {}
    for i, vertex in enumerate(construction.s_vertices, start=1):
        if i in subset:
            forced[vertex] = 1
        else:
            forbidden[vertex] = frozenset({1})
    return ColoringConstraint(forced=forced, forbidden=forbidden)


def realize(construction: GadgetConstruction, subset: frozenset[int] | set[int]) -> Coloring | None:
    """求 {i : φ(v_i)=1} = R 的 L-着色；不存在时返回 None"""
    constraint = realization_constraint(construction, frozenset(subset))
    found = solve_domains(construction.graph.adjacency, constraint.apply(construction.list_assignment))
    if found is None:
        return None
    return Coloring(colors=dict(sorted(found.items())))


def realizable_sets(
    construction: GadgetConstruction, max_n: int | None = None, max_t: int | None = None
) -> list[frozenset[int]]:
    """
    枚举全部 S-可实现集合，按 (大小, 元素) 排序。

    Raises:
        CapExceededError: n 或 t 超过上限
    """
    spec = _require_knapsack(construction)
    check_cap(spec.n, settings.GADGET_MAX_N if max_n is None else max_n, "可实现集合的 n")
    check_cap(spec.t, settings.GADGET_MAX_T if max_t is None else max_t, "可实现集合的 t")
    family: list[frozenset[int]] = []
    for size in range(spec.n + 1):
        for subset in combinations(range(1, spec.n + 1), size):
            if realize(construction, frozenset(subset)) is not None:
                family.append(frozenset(subset))
    logger.info(f"s={spec.s}, t={spec.t}: {len(family)} 个可实现集合")
    return family


def expected_realizable_sets(spec: KnapsackSpec) -> list[frozenset[int]]:
    """Σ_{i∈R} s_i ≤ t 的全部 R，排序方式同 realizable_sets"""
    return [
        frozenset(subset)
        for size in range(spec.n + 1)
        for subset in combinations(range(1, spec.n + 1), size)
        if sum(spec.s[i - 1] for i in subset) <= spec.t
    ]


# ==================== 对数间隙实例 ====================
def log_gap_spec(k: int) -> KnapsackSpec:
    """n = 2^k - 1，s_i 为满足 i·s_i ≤ n 的最大二的幂，t = 2^{k-1}"""
    if k < 1:
        raise PreconditionViolatedError(f"k 必须为正整数，收到 {k}")
    n = 2**k - 1
    s = []
    for i in range(1, n + 1):
        power = 1
        while i * power * 2 <= n:
            power *= 2
        s.append(power)
    return KnapsackSpec(s=tuple(s), t=2 ** (k - 1))


def build_log_gap_instance(
    k: int, max_k: int | None = None
) -> tuple[GadgetConstruction, WeightedRequest]:
    """
    构造对数间隙实例及困难加权请求 w(v_i, 1) = s_i。

    Raises:
        CapExceededError: k 超过 LOG_GAP_MAX_K
    """
    check_cap(k, settings.LOG_GAP_MAX_K if max_k is None else max_k, "对数间隙实例的 k")
    spec = log_gap_spec(k)
    construction = build_knapsack_graph(spec)
    hard = WeightedRequest(
        weights={(vertex, 1): s for vertex, s in zip(construction.s_vertices, spec.s)}
    )
    if hard.total != k * 2 ** (k - 1):
        raise InternalError(f"困难请求的总权重 {hard.total} 不等于 k·2^(k-1)")
    return construction, hard


def hard_request_best_ratio(
    construction: GadgetConstruction,
    w: WeightedRequest,
    family: list[frozenset[int]] | None = None,
) -> Fraction:
    """
    只在 (v_i, 1) 上有权重的请求的最佳满足比例：max_{R 可实现} Σ_{i∈R} w(v_i,1) / w(G,L)。
    """
    index = {vertex: i for i, vertex in enumerate(construction.s_vertices, start=1)}
    if any(c != 1 or v not in index for v, c in w.weights):
        raise BadRequestError("该请求只能在 (v_i, 1) 上有权重")
    if w.total == 0:
        raise BadRequestError("请求的总权重为零")
    if family is None:
        spec = _require_knapsack(construction)
        family = realizable_sets(construction, max_n=spec.n, max_t=spec.t)
    best = max(
        sum((w.weight(vertex, 1) for vertex, i in index.items() if i in subset), Fraction(0))
        for subset in family
    )
    return best / w.total


def all_ones_ratio(construction: GadgetConstruction, family: list[frozenset[int]] | None = None) -> Fraction:
    """请求 {v_i → 1 : 全部 i} 的最佳满足比例"""
    spec = _require_knapsack(construction)
    if family is None:
        family = realizable_sets(construction, max_n=spec.n, max_t=spec.t)
    return Fraction(max(len(subset) for subset in family), spec.n)


def singleton_requests_satisfiable(construction: GadgetConstruction) -> bool:
    """是否每个单点请求 {v → c} 都能被某个 L-着色满足"""
    adj = construction.graph.adjacency
    for vertex in range(1, construction.n_vertices + 1):
        for c in sorted(construction.lists[vertex]):
            domains = dict(construction.lists)
            domains[vertex] = frozenset({c})
            if solve_domains(adj, domains) is None:
                logger.debug(f"单点请求 {vertex}→{c} 无法满足")
                return False
    return True


# ==================== 满足请求 ====================
def quarter_satisfy(construction: GadgetConstruction, w: WeightedRequest) -> Coloring:
    """
    在四个规范着色中取匹配权重最大者，保证不少于 w(G,L)/4。

    Raises:
        BadRequestError: 存在 v ∈ S 使 w(v,1) ≠ 0
    """
    for vertex in construction.s_vertices:
        if w.weight(vertex, 1) != 0:
            raise BadRequestError(f"w(v,1) 必须为零，但 w({vertex},1) = {w.weight(vertex, 1)}")
    candidates = [canonical_coloring(construction, index) for index in CANONICAL_TABLE]
    weights = [matched_weight(w, phi) for phi in candidates]
    best = max(range(len(candidates)), key=lambda i: (weights[i], -i))
    if 4 * weights[best] < w.total:
        raise InternalError(
            f"最优规范着色只匹配了 {weights[best]}，少于总权重 {w.total} 的 1/4"
        )
    return candidates[best]


def split_satisfy(construction: GadgetConstruction, r: Request) -> Coloring:
    """
    拆分请求：r1 为 S 上请求颜色 1 的部分，r2 为其余部分。

    φ2 用 quarter_satisfy 满足 r2 的至少 1/4；φ1 实现 R1 中最大的 ⌈|R1|/2⌉ 个下标，
    满足 r1 的至少 1/2。返回二者中匹配更多的一个，断言匹配数不少于 |dom(r)|/6。
    """
    r.check_against(construction.list_assignment)
    index = {vertex: i for i, vertex in enumerate(construction.s_vertices, start=1)}
    first = {v: c for v, c in r.entries.items() if v in index and c == 1}
    second = {v: c for v, c in r.entries.items() if v not in first}

    phi2 = quarter_satisfy(construction, WeightedRequest(weights={(v, c): 1 for v, c in second.items()}))
    chosen_indices = sorted(index[v] for v in first)
    keep = frozenset(chosen_indices[len(chosen_indices) - ceil(len(chosen_indices) / 2):])
    phi1 = realize(construction, keep)
    if phi1 is None:
        raise InternalError(f"下标集合 {sorted(keep)} 不可实现")

    matches1 = count_request_matches(r, phi1)
    matches2 = count_request_matches(r, phi2)
    best, matches = (phi1, matches1) if matches1 >= matches2 else (phi2, matches2)
    if 6 * matches < len(r):
        raise InternalError(f"拆分只满足了 {matches}/{len(r)} 个请求顶点，少于 1/6")
    return best
