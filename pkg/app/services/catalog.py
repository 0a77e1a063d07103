"""
小规模实例目录

验证扫描用到的图与列表分配：
- networkx 图谱（graph atlas）中不超过 7 个顶点的全部图（同构意义下）
- 在颜色置换意义下覆盖全部等价类的列表分配
- 随机请求与随机加权请求
"""

import logging
from collections.abc import Iterator
from fractions import Fraction
from itertools import combinations

import networkx as nx
import numpy as np

from app.core.utils import PreconditionViolatedError
from app.services.graph_core import Graph, ListAssignment, Request, WeightedRequest

logger = logging.getLogger(__name__)

ATLAS_MAX_VERTICES = 7


def atlas_graphs(max_n: int, min_n: int = 1, connected: bool = False) -> Iterator[Graph]:
    """按图谱顺序生成 min_n..max_n 个顶点的全部图，顶点重新编号为 1..n"""
    if max_n > ATLAS_MAX_VERTICES:
        raise PreconditionViolatedError(f"图谱只包含不超过 {ATLAS_MAX_VERTICES} 个顶点的图")
    for graph in nx.graph_atlas_g():
        n = graph.number_of_nodes()
        if n < min_n or n > max_n:
            continue
        if connected and not nx.is_connected(graph):
            continue
        yield Graph(n=n, edges=[(u + 1, v + 1) for u, v in graph.edges()])


def atlas_trees(max_n: int) -> Iterator[Graph]:
    for g in atlas_graphs(max_n, connected=True):
        if len(g.edges) == g.n - 1:
            yield g


def list_assignments(n: int, size: int, universe: int) -> Iterator[ListAssignment]:
    """
    生成顶点 1..n 上大小为 size、颜色取自 1..universe 的列表分配。

    每个颜色置换等价类至少出现一次：依次为每个顶点选列表，
    新出现的颜色总是取尚未使用的最小颜色。
    """
    if size > universe:
        return

    def extend(v: int, used: int, chosen: list[frozenset[int]]) -> Iterator[ListAssignment]:
        if v > n:
            yield ListAssignment.from_sequence(chosen)
            return
        for fresh in range(0, min(size, universe - used) + 1):
            for old in combinations(range(1, used + 1), size - fresh):
                colors = frozenset(old) | frozenset(range(used + 1, used + fresh + 1))
                chosen.append(colors)
                yield from extend(v + 1, used + fresh, chosen)
                chosen.pop()

    yield from extend(1, 0, [])


def random_requests(g: Graph, lists: ListAssignment, seed: int, count: int) -> list[Request]:
    """随机非空请求：每个顶点以 1/2 概率加入定义域，颜色在列表中均匀选取"""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    requests: list[Request] = []
    while len(requests) < count:
        entries = {}
        for v in g.vertices:
            if rng.random() < 0.5:
                palette = sorted(lists[v])
                entries[v] = palette[int(rng.integers(len(palette)))]
        if entries:
            requests.append(Request(entries=entries))
    return requests


def random_weighted_requests(
    lists: ListAssignment, seed: int, count: int, max_numerator: int = 9, max_denominator: int = 4
) -> list[WeightedRequest]:
    """随机有理数加权请求，保证总权重为正"""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    pairs = [(v, c) for v in sorted(lists.lists) for c in sorted(lists[v])]
    requests: list[WeightedRequest] = []
    while len(requests) < count:
        weights = {}
        for pair in pairs:
            numerator = int(rng.integers(0, max_numerator + 1))
            if numerator:
                weights[pair] = Fraction(numerator, int(rng.integers(1, max_denominator + 1)))
        if weights:
            requests.append(WeightedRequest(weights=weights))
    return requests
