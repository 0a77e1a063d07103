"""
图、列表与请求的数据模型

提供：
1. Graph / ListAssignment / Request / WeightedRequest / Coloring 等领域类型
2. 退化度（degeneracy）与消去序
3. 弱 d-退化的规约步骤与贪心判定
4. 最大平均度（mad），基于最小割的精确二分搜索
5. 放电引理的见证顶点（sg_witness）

顶点为 1..n 的整数；颜色为任意正整数，不要求连续。
"""

import logging
from collections.abc import Iterable, Mapping
from enum import Enum
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import NamedTuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.core.utils import (
    EmptyGraphError,
    InternalError,
    PreconditionViolatedError,
)

logger = logging.getLogger(__name__)

# 邻接表：顶点 -> 邻居集合。递归过程在 G-P 上运行时直接使用它，无需重新编号。
Adjacency = Mapping[int, frozenset[int]]


# ==================== 领域类型 ====================
class Graph(BaseModel):
    """无向简单图，顶点为 1..n"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0)
    edges: frozenset[tuple[int, int]] = frozenset()

    @field_validator("edges", mode="before")
    @classmethod
    def _normalize_edges(cls, value: Iterable) -> frozenset[tuple[int, int]]:
        seen: set[tuple[int, int]] = set()
        for pair in value:
            u, v = pair
            if u == v:
                raise ValueError(f"不允许自环: ({u}, {v})")
            edge = (min(u, v), max(u, v))
            if edge in seen:
                raise ValueError(f"重复的边: {edge}")
            seen.add(edge)
        return frozenset(seen)

    @model_validator(mode="after")
    def _check_endpoints(self) -> "Graph":
        for u, v in self.edges:
            if u < 1 or v > self.n:
                raise ValueError(f"边 ({u}, {v}) 的端点不在 1..{self.n} 中")
        return self

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        return cls(n=n, edges=list(edges))

    @classmethod
    def from_adjacency(cls, adj: Adjacency) -> "Graph":
        """从顶点恰为 1..n 的邻接表构造"""
        n = len(adj)
        if set(adj) != set(range(1, n + 1)):
            raise PreconditionViolatedError("邻接表的顶点必须恰为 1..n")
        return cls(n=n, edges=[(u, v) for u in adj for v in adj[u] if u < v])

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    @cached_property
    def adjacency(self) -> dict[int, frozenset[int]]:
        neighbors: dict[int, set[int]] = {v: set() for v in self.vertices}
        for u, v in self.edges:
            neighbors[u].add(v)
            neighbors[v].add(u)
        return {v: frozenset(nbrs) for v, nbrs in neighbors.items()}

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_networkx(self) -> nx.Graph:
        """转换为 networkx 图；按升序插入，保证邻居迭代顺序为升序"""
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.sorted_edges())
        return graph


class ListAssignment(BaseModel):
    """列表分配 L：顶点 -> 颜色集合"""

    model_config = ConfigDict(frozen=True)

    lists: dict[int, frozenset[int]]

    @field_validator("lists")
    @classmethod
    def _check_lists(cls, value: dict[int, frozenset[int]]) -> dict[int, frozenset[int]]:
        for v, colors in value.items():
            if not colors:
                raise ValueError(f"顶点 {v} 的列表为空")
            if any(c < 1 for c in colors):
                raise ValueError(f"顶点 {v} 的列表含非正整数颜色")
        return value

    @classmethod
    def uniform(cls, n: int, colors: Iterable[int]) -> "ListAssignment":
        palette = frozenset(colors)
        return cls(lists={v: palette for v in range(1, n + 1)})

    @classmethod
    def from_sequence(cls, lists: Iterable[Iterable[int]]) -> "ListAssignment":
        """按顶点 1, 2, ... 的顺序给出各列表"""
        return cls(lists={v: frozenset(colors) for v, colors in enumerate(lists, start=1)})

    def __getitem__(self, v: int) -> frozenset[int]:
        return self.lists[v]

    def check_against(self, g: Graph) -> None:
        """检查列表恰好覆盖图的所有顶点"""
        if set(self.lists) != set(g.vertices):
            raise PreconditionViolatedError(
                "列表分配的顶点集与图不一致",
                {"missing": sorted(set(g.vertices) - set(self.lists))},
            )

    def sizes(self) -> set[int]:
        return {len(colors) for colors in self.lists.values()}

    def colors(self) -> set[int]:
        return set().union(*self.lists.values()) if self.lists else set()


class Request(BaseModel):
    """请求 r：dom(r) 中每个顶点一个偏好颜色"""

    model_config = ConfigDict(frozen=True)

    entries: dict[int, int] = Field(default_factory=dict)

    @property
    def domain(self) -> list[int]:
        return sorted(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def check_against(self, lists: ListAssignment) -> None:
        for v, c in self.entries.items():
            if v not in lists.lists or c not in lists[v]:
                raise PreconditionViolatedError(f"请求颜色 r({v})={c} 不在 L({v}) 中")

    def restrict(self, vertices: Iterable[int]) -> "Request":
        keep = set(vertices)
        return Request(entries={v: c for v, c in self.entries.items() if v in keep})

    def sort_key(self) -> tuple[tuple[int, int], ...]:
        """字典序比较用的键"""
        return tuple(sorted(self.entries.items()))


class WeightedRequest(BaseModel):
    """加权请求 w：(顶点, 颜色) -> 非负有理数"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: dict[tuple[int, int], Fraction] = Field(default_factory=dict)

    @field_validator("weights", mode="before")
    @classmethod
    def _coerce_weights(cls, value: Mapping) -> dict[tuple[int, int], Fraction]:
        result: dict[tuple[int, int], Fraction] = {}
        for (v, c), weight in value.items():
            weight = Fraction(weight)
            if weight < 0:
                raise ValueError(f"权重 w({v},{c}) 为负")
            result[(v, c)] = weight
        return result

    @property
    def total(self) -> Fraction:
        """w(G, L)"""
        return sum(self.weights.values(), Fraction(0))

    def weight(self, v: int, c: int) -> Fraction:
        return self.weights.get((v, c), Fraction(0))

    def check_against(self, lists: ListAssignment) -> None:
        for v, c in self.weights:
            if v not in lists.lists or c not in lists[v]:
                raise PreconditionViolatedError(f"加权请求的键 ({v},{c}) 不满足 c ∈ L(v)")


class Coloring(BaseModel):
    """着色 φ：顶点 -> 颜色"""

    model_config = ConfigDict(frozen=True)

    colors: dict[int, int]

    def __getitem__(self, v: int) -> int:
        return self.colors[v]

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(self.colors[v] for v in sorted(self.colors))

    def is_proper(self, g: Graph) -> bool:
        if set(self.colors) != set(g.vertices):
            return False
        return all(self.colors[u] != self.colors[v] for u, v in g.edges)

    def respects(self, lists: ListAssignment) -> bool:
        return all(c in lists[v] for v, c in self.colors.items())


class ReductionKind(str, Enum):
    SINGLE_VERTEX = "SingleVertex"
    CONNECTED_BLOCK = "ConnectedBlock"


class WeakReductionStep(BaseModel):
    """弱退化的一步规约：度数 ≤ d 的单点，或 d+1 个度数为 d+1 的连通顶点块"""

    model_config = ConfigDict(frozen=True)

    kind: ReductionKind
    vertices: tuple[int, ...]


class WitnessKind(str, Enum):
    LOW_DEGREE = "LowDegree"
    SOFT_VERTEX = "SoftVertex"


class SgWitness(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: WitnessKind
    vertex: int


class Degeneracy(NamedTuple):
    d: int
    order: tuple[int, ...]


# ==================== 邻接表辅助函数 ====================
def remove_vertices(adj: Adjacency, removed: Iterable[int]) -> dict[int, frozenset[int]]:
    """返回删除若干顶点后的邻接表（即 G - P）"""
    gone = frozenset(removed)
    return {v: nbrs - gone for v, nbrs in adj.items() if v not in gone}


def induced_adjacency(adj: Adjacency, vertices: Iterable[int]) -> dict[int, frozenset[int]]:
    """返回导出子图 G[P] 的邻接表"""
    keep = frozenset(vertices)
    return {v: adj[v] & keep for v in keep}


def is_connected_set(adj: Adjacency, vertices: Iterable[int]) -> bool:
    """判断顶点集在 adj 中导出的子图是否连通"""
    members = frozenset(vertices)
    if not members:
        return False
    graph = nx.Graph()
    graph.add_nodes_from(members)
    graph.add_edges_from((v, u) for v in members for u in adj[v] & members)
    return nx.is_connected(graph)


# ==================== 退化度 ====================
def degeneracy(g: Graph) -> Degeneracy:
    """
    计算退化度及消去序。

    d 为 networkx 核数的最大值。消去序反复删除最小度顶点（同度取编号最小者），
    返回删除顺序的逆序，其中每个顶点至多有 d 个在前的邻居。

    Args:
        g: 图

    Returns:
        Degeneracy: (d, order)
    """
    d = max(nx.core_number(g.to_networkx()).values(), default=0)
    adj = {v: set(nbrs) for v, nbrs in g.adjacency.items()}
    removal: list[int] = []
    while adj:
        v = min(adj, key=lambda x: (len(adj[x]), x))
        for u in adj[v]:
            adj[u].discard(v)
        del adj[v]
        removal.append(v)
    return Degeneracy(d=d, order=tuple(reversed(removal)))


def is_d_degenerate(g: Graph, d: int) -> bool:
    return degeneracy(g).d <= d


# ==================== 弱退化 ====================
def reduction_step(adj: Adjacency, d: int) -> WeakReductionStep | None:
    """
    在邻接表上寻找规范的弱退化规约步骤。

    优先返回编号最小的度数 ≤ d 的顶点；否则返回字典序最小的、
    由 d+1 个度数为 d+1 的顶点组成的连通集合；都不存在时返回 None。
    """
    if d < 0:
        raise PreconditionViolatedError(f"d 必须非负，收到 {d}")
    for v in sorted(adj):
        if len(adj[v]) <= d:
            return WeakReductionStep(kind=ReductionKind.SINGLE_VERTEX, vertices=(v,))
    candidates = sorted(v for v in adj if len(adj[v]) == d + 1)
    for block in combinations(candidates, d + 1):
        if is_connected_set(adj, block):
            return WeakReductionStep(kind=ReductionKind.CONNECTED_BLOCK, vertices=block)
    return None


def find_weak_reduction(g: Graph, d: int) -> WeakReductionStep | None:
    return reduction_step(g.adjacency, d)


def weak_reduction_sequence(adj: Adjacency, d: int) -> list[WeakReductionStep] | None:
    """
    贪心地反复规约直到图为空。

    Returns:
        list[WeakReductionStep] | None: 规约步骤序列；中途无法规约时返回 None
    """
    current = dict(adj)
    steps: list[WeakReductionStep] = []
    while current:
        step = reduction_step(current, d)
        if step is None:
            logger.debug(f"弱 {d}-退化规约在剩余 {len(current)} 个顶点时失败")
            return None
        steps.append(step)
        current = remove_vertices(current, step.vertices)
    return steps


def is_weakly_degenerate(g: Graph, d: int) -> bool:
    return weak_reduction_sequence(g.adjacency, d) is not None


# ==================== 最大平均度 ====================
def average_degree(g: Graph) -> Fraction:
    if g.n == 0:
        raise EmptyGraphError("空图没有平均度")
    return Fraction(2 * len(g.edges), g.n)


def _edges_within(g: Graph, vertices: frozenset[int]) -> int:
    return sum(1 for u, v in g.edges if u in vertices and v in vertices)


def _denser_subgraph(g: Graph, threshold: Fraction) -> frozenset[int] | None:
    """
    用最小割寻找 |E(H)|/|V(H)| > threshold 的子图。

    选边收益 q、选点代价 p（threshold = p/q），边依赖其两个端点；
    最大闭包收益 q|E| - mincut 为正当且仅当存在更稠密的子图。
    """
    p, q = threshold.numerator, threshold.denominator
    flow = nx.DiGraph()
    for u, v in g.sorted_edges():
        edge_node = ("e", u, v)
        flow.add_edge("s", edge_node, capacity=q)
        # 不设 capacity 即为无穷容量
        flow.add_edge(edge_node, ("v", u))
        flow.add_edge(edge_node, ("v", v))
    for v in g.vertices:
        flow.add_edge(("v", v), "t", capacity=p)
    cut_value, (source_side, _) = nx.minimum_cut(flow, "s", "t")
    if q * len(g.edges) - cut_value <= 0:
        return None
    return frozenset(node[1] for node in source_side if isinstance(node, tuple) and node[0] == "v")


def densest_subgraph(g: Graph) -> tuple[frozenset[int], Fraction]:
    """
    精确求 |E(H)|/|V(H)| 最大的子图。

    在阈值上二分：密度都是分母 ≤ n 的分数，不同密度之差至少 1/n²，
    因此区间宽度小于 1/n² 时下界即为最优值。

    Returns:
        tuple[frozenset[int], Fraction]: (顶点集, 密度 e/v)
    """
    if g.n == 0:
        raise EmptyGraphError("空图没有非空子图")
    best = frozenset(g.vertices)
    lo = Fraction(len(g.edges), g.n)
    if not g.edges:
        return best, lo
    hi = Fraction(g.n)
    resolution = Fraction(1, g.n * g.n)
    flow_calls = 0
    while hi - lo >= resolution:
        mid = (lo + hi) / 2
        denser = _denser_subgraph(g, mid)
        flow_calls += 1
        if denser is None:
            hi = mid
        else:
            best = denser
            lo = Fraction(_edges_within(g, denser), len(denser))
    logger.debug(f"mad 二分搜索完成: {flow_calls} 次最小割, 密度 {lo}")
    return best, lo


def max_average_degree_exhaustive(g: Graph) -> Fraction:
    """穷举所有导出子图计算 mad"""
    if g.n == 0:
        raise EmptyGraphError("空图没有 mad")
    vertices = list(g.vertices)
    best = Fraction(0)
    for mask in range(1, 1 << g.n):
        chosen = frozenset(v for i, v in enumerate(vertices) if mask >> i & 1)
        best = max(best, Fraction(2 * _edges_within(g, chosen), len(chosen)))
    return best


def max_average_degree(g: Graph) -> Fraction:
    """
    计算最大平均度 mad(G) = max 2|E(H)|/|V(H)|。

    使用最小割二分搜索；顶点数不超过 MAD_EXHAUSTIVE_MAX_VERTICES 时
    同时穷举子图，两者必须一致。

    Raises:
        EmptyGraphError: 空图
        InternalError: 两种方法结果不一致
    """
    _, density = densest_subgraph(g)
    mad = 2 * density
    if g.n <= settings.MAD_EXHAUSTIVE_MAX_VERTICES:
        exhaustive = max_average_degree_exhaustive(g)
        if exhaustive != mad:
            raise InternalError(
                "mad 的最小割结果与穷举结果不一致",
                {"flow": str(mad), "exhaustive": str(exhaustive)},
            )
    return mad


# ==================== 放电见证 ====================
def sg_threshold(d: int) -> Fraction:
    """d + 1 + 2/(d+4)"""
    return d + 1 + Fraction(2, d + 4)


def sg_witness(g: Graph, d: int) -> SgWitness | None:
    """
    寻找度数 ≤ d 的顶点，或度数为 d+1 且至多一个邻居度数大于 d+1 的顶点。

    平均度小于 d+1+2/(d+4) 的图必有这样的顶点；此时返回 None 视为内部错误。
    """
    if d < 0:
        raise PreconditionViolatedError(f"d 必须非负，收到 {d}")
    adj = g.adjacency
    for v in g.vertices:
        if len(adj[v]) <= d:
            return SgWitness(kind=WitnessKind.LOW_DEGREE, vertex=v)
    for v in g.vertices:
        if len(adj[v]) == d + 1:
            bigger = sum(1 for u in adj[v] if len(adj[u]) > d + 1)
            if bigger <= 1:
                return SgWitness(kind=WitnessKind.SOFT_VERTEX, vertex=v)
    if g.n > 0 and average_degree(g) < sg_threshold(d):
        raise InternalError(
            "平均度低于阈值却找不到见证顶点",
            {"average_degree": str(average_degree(g)), "d": d},
        )
    return None
