"""
精确的 L-着色引擎

提供：
1. 按字典序枚举全部 L-着色
2. 带强制色 / 禁用色约束的可着色判定（回溯 + 约束传播）
3. 请求最大匹配（分支定界）与加权请求的最大匹配
4. 生成树逆 DFS 序的贪心着色：除 v 外不使用颜色 c

约束传播包含三条规则：
- 前向检查：已确定颜色的顶点从邻居的域中删去该颜色
- 单元传播：域缩为单色即视为确定
- 裸对规则：相邻两顶点的域为同一个二元集时，它们的公共邻居不能使用这两种颜色
"""

import logging
from collections import deque
from collections.abc import Iterable, Iterator
from fractions import Fraction
from typing import NamedTuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import settings
from app.core.utils import InternalError, PreconditionViolatedError, check_cap
from app.services.graph_core import (
    Adjacency,
    Coloring,
    Graph,
    ListAssignment,
    Request,
    WeightedRequest,
)

logger = logging.getLogger(__name__)

Domains = dict[int, frozenset[int]]


class ColoringConstraint(BaseModel):
    """强制色与禁用色约束"""

    model_config = ConfigDict(frozen=True)

    forced: dict[int, int] = Field(default_factory=dict)
    forbidden: dict[int, frozenset[int]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_disjoint(self) -> "ColoringConstraint":
        for v, c in self.forced.items():
            if c in self.forbidden.get(v, frozenset()):
                raise ValueError(f"顶点 {v} 的强制色 {c} 同时被禁用")
        return self

    def check_against(self, lists: ListAssignment) -> None:
        for v, c in self.forced.items():
            if v not in lists.lists or c not in lists[v]:
                raise PreconditionViolatedError(f"强制色 {c} 不在 L({v}) 中")
        for v in self.forbidden:
            if v not in lists.lists:
                raise PreconditionViolatedError(f"禁用色约束引用了不存在的顶点 {v}")

    def apply(self, lists: ListAssignment) -> Domains:
        """把约束作用到列表上，得到初始域"""
        domains = dict(lists.lists)
        for v, colors in self.forbidden.items():
            domains[v] = domains[v] - colors
        for v, c in self.forced.items():
            domains[v] = frozenset({c})
        return domains


class Enumeration(NamedTuple):
    colorings: list[Coloring]
    truncated: bool


# ==================== 约束传播 ====================
def _propagate(adj: Adjacency, domains: Domains, touched: Iterable[int]) -> bool:
    """
    就地收缩域直到不动点。

    Returns:
        bool: 出现空域时返回 False
    """
    pending = deque(touched)
    while pending:
        v = pending.popleft()
        dom = domains[v]
        if len(dom) == 1:
            for u in adj[v]:
                if dom <= domains[u]:
                    domains[u] = domains[u] - dom
                    if not domains[u]:
                        return False
                    pending.append(u)
        elif len(dom) == 2:
            for u in adj[v]:
                if domains[u] != dom:
                    continue
                for x in adj[v] & adj[u]:
                    if domains[x] & dom:
                        domains[x] = domains[x] - dom
                        if not domains[x]:
                            return False
                        pending.append(x)
    return True


def _select_vertex(adj: Adjacency, domains: Domains, open_vertices: list[int]) -> int:
    # 最小剩余值，其次未确定邻居最多，再其次编号最小
    return min(
        open_vertices,
        key=lambda v: (len(domains[v]), -sum(1 for u in adj[v] if len(domains[u]) > 1), v),
    )


def _solve(adj: Adjacency, domains: Domains) -> dict[int, int] | None:
    open_vertices = [v for v, dom in domains.items() if len(dom) > 1]
    if not open_vertices:
        return {v: next(iter(dom)) for v, dom in domains.items()}
    v = _select_vertex(adj, domains, open_vertices)
    for c in sorted(domains[v]):
        trial = dict(domains)
        trial[v] = frozenset({c})
        if _propagate(adj, trial, [v]):
            found = _solve(adj, trial)
            if found is not None:
                return found
    return None


def solve_domains(adj: Adjacency, domains: Domains) -> dict[int, int] | None:
    """在给定初始域上寻找一个正常着色；无解返回 None"""
    domains = dict(domains)
    if any(not dom for dom in domains.values()):
        return None
    if not _propagate(adj, domains, sorted(domains)):
        return None
    return _solve(adj, domains)


# ==================== 枚举 ====================
def iter_colorings(adj: Adjacency, lists: Domains) -> Iterator[tuple[int, ...]]:
    """
    按字典序（顶点升序、颜色升序）生成全部正常着色。

    顶点可以是任意整数标签；产出的元组按顶点升序对齐。
    """
    order = sorted(lists)
    position = {v: i for i, v in enumerate(order)}
    later = {v: [u for u in adj[v] if u in position and position[u] > position[v]] for v in order}
    chosen: list[int] = []

    def extend(index: int, domains: Domains) -> Iterator[tuple[int, ...]]:
        if index == len(order):
            yield tuple(chosen)
            return
        v = order[index]
        for c in sorted(domains[v]):
            trial = domains
            dead = False
            for u in later[v]:
                if c in trial[u]:
                    if trial is domains:
                        trial = dict(domains)
                    trial[u] = trial[u] - {c}
                    if not trial[u]:
                        dead = True
                        break
            if dead:
                continue
            chosen.append(c)
            yield from extend(index + 1, trial)
            chosen.pop()

    if any(not colors for colors in lists.values()):
        return
    yield from extend(0, dict(lists))


def enumerate_L_colorings(g: Graph, lists: ListAssignment, limit: int | None = None) -> Enumeration:
    """
    枚举 G 的全部 L-着色。

    Args:
        g: 图
        lists: 列表分配
        limit: 最多返回的着色数，None 表示不截断

    Returns:
        Enumeration: (按字典序排列的着色, 是否被截断)
    """
    lists.check_against(g)
    result: list[Coloring] = []
    for colors in iter_colorings(g.adjacency, lists.lists):
        if limit is not None and len(result) >= limit:
            logger.debug(f"着色枚举在 {limit} 处截断")
            return Enumeration(colorings=result, truncated=True)
        result.append(Coloring.model_construct(colors=dict(zip(g.vertices, colors))))
    return Enumeration(colorings=result, truncated=False)


def all_L_colorings(g: Graph, lists: ListAssignment, cap: int | None = None) -> list[tuple[int, ...]]:
    """
    以元组形式返回全部 L-着色，数量超过上限时抛出 CapExceededError。

    内部热路径使用，不构造 Coloring 模型。
    """
    cap = settings.COLORING_ENUMERATION_CAP if cap is None else cap
    lists.check_against(g)
    colorings: list[tuple[int, ...]] = []
    for colors in iter_colorings(g.adjacency, lists.lists):
        colorings.append(colors)
        check_cap(len(colorings), cap, "L-着色枚举")
    return colorings


# ==================== 可着色判定 ====================
def is_L_colorable(
    g: Graph, lists: ListAssignment, constraint: ColoringConstraint | None = None
) -> Coloring | None:
    """
    判断在约束下是否存在 L-着色。

    Returns:
        Coloring | None: 见证着色；不可着色时为 None
    """
    lists.check_against(g)
    constraint = constraint or ColoringConstraint()
    constraint.check_against(lists)
    found = solve_domains(g.adjacency, constraint.apply(lists))
    if found is None:
        return None
    return Coloring(colors=found)


def is_proper_L_coloring(g: Graph, lists: ListAssignment, phi: Coloring) -> bool:
    return phi.is_proper(g) and phi.respects(lists)


# ==================== 请求匹配 ====================
def count_request_matches(r: Request, phi: Coloring) -> int:
    return sum(1 for v, c in r.entries.items() if phi.colors.get(v) == c)


def matched_weight(w: WeightedRequest, phi: Coloring) -> Fraction:
    return sum(
        (weight for (v, c), weight in w.weights.items() if phi.colors.get(v) == c),
        Fraction(0),
    )


def max_request_match(g: Graph, lists: ListAssignment, r: Request) -> tuple[int, Coloring] | None:
    """
    求与请求 r 一致的顶点数最多的 L-着色（精确分支定界）。

    上界 = 已匹配数 + 未确定且请求色仍在域中的请求顶点数。

    Returns:
        tuple[int, Coloring] | None: (最大匹配数, 达到它的着色)；G 不可 L-着色时为 None
    """
    lists.check_against(g)
    r.check_against(lists)
    adj = g.adjacency
    domains = dict(lists.lists)
    if not _propagate(adj, domains, sorted(domains)):
        return None

    wanted = r.entries
    best_count = -1
    best: dict[int, int] | None = None

    def bound(doms: Domains) -> tuple[int, int]:
        matched = possible = 0
        for v, c in wanted.items():
            dom = doms[v]
            if len(dom) == 1:
                matched += c in dom
            elif c in dom:
                possible += 1
        return matched, possible

    def search(doms: Domains) -> None:
        nonlocal best_count, best
        matched, possible = bound(doms)
        if matched + possible <= best_count or best_count == len(wanted):
            return
        open_vertices = [v for v, dom in doms.items() if len(dom) > 1]
        if not open_vertices:
            best_count = matched
            best = {v: next(iter(dom)) for v, dom in doms.items()}
            return
        v = _select_vertex(adj, doms, open_vertices)
        colors = sorted(doms[v])
        if v in wanted and wanted[v] in doms[v]:
            colors.remove(wanted[v])
            colors.insert(0, wanted[v])
        for c in colors:
            trial = dict(doms)
            trial[v] = frozenset({c})
            if _propagate(adj, trial, [v]):
                search(trial)

    search(domains)
    if best is None:
        return None
    return best_count, Coloring(colors=best)


def max_weighted_match(
    g: Graph,
    lists: ListAssignment,
    w: WeightedRequest,
    colorings: list[tuple[int, ...]] | None = None,
) -> tuple[Fraction, Coloring] | None:
    """
    扫描全部 L-着色，求加权请求的最大匹配权重。

    Args:
        colorings: 预先枚举好的着色元组（按顶点升序），省略时现场枚举

    Returns:
        tuple[Fraction, Coloring] | None: (最大权重, 字典序最小的最优着色)；不可着色时为 None
    """
    if colorings is None:
        colorings = all_L_colorings(g, lists)
    vertices = list(g.vertices)
    best_weight: Fraction | None = None
    best: tuple[int, ...] | None = None
    for colors in colorings:
        weight = sum(
            (w.weight(v, c) for v, c in zip(vertices, colors)),
            Fraction(0),
        )
        if best_weight is None or weight > best_weight:
            best_weight, best = weight, colors
    if best is None:
        return None
    return best_weight, Coloring(colors=dict(zip(vertices, best)))


# ==================== 避色着色 ====================
def color_avoiding(g: Graph, lists: ListAssignment, v: int, c: int) -> Coloring:
    """
    构造除 v 外没有顶点使用颜色 c 的 L-着色。

    从除 v 外所有列表中删去 c，以 v 为根做 DFS，按前序的逆序贪心着色：
    每个非根顶点着色时其父亲尚未着色，因此总有可用颜色。

    Raises:
        PreconditionViolatedError: 图不连通，或某顶点 |L(w)| ≤ deg(w)
    """
    lists.check_against(g)
    if v not in g.vertices:
        raise PreconditionViolatedError(f"顶点 {v} 不在图中")
    graph = g.to_networkx()
    if not nx.is_connected(graph):
        raise PreconditionViolatedError("color_avoiding 要求图连通")
    adj = g.adjacency
    for x in g.vertices:
        if len(lists[x]) <= len(adj[x]):
            raise PreconditionViolatedError(
                f"顶点 {x} 的列表大小 {len(lists[x])} 不超过度数 {len(adj[x])}"
            )

    reduced = {x: lists[x] if x == v else lists[x] - {c} for x in g.vertices}
    colors: dict[int, int] = {}
    for x in reversed(list(nx.dfs_preorder_nodes(graph, source=v))):
        used = {colors[u] for u in adj[x] if u in colors}
        available = reduced[x] - used
        if not available:
            raise InternalError(f"逆 DFS 贪心着色在顶点 {x} 处无色可用")
        colors[x] = min(available)
    return Coloring(colors=colors)
