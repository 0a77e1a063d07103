"""
随机着色过程

提供：
1. 弱 d-退化图上的递归随机着色（大小为 d+2 的列表），及其精确分布、边际概率与避色概率
2. 最大平均度过程：独立集请求的随机删色 + 翻转，外层按色类拆分请求
3. 蒙特卡洛频率与精确分布的全变差距离

随机数统一使用 numpy 的 Generator(PCG64)，种子经 SeedSequence 派生，
相同种子在任何平台上得到相同结果。
"""

import logging
from collections import Counter
from collections.abc import Callable, Iterable
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.core.config import settings
from app.core.utils import (
    InternalError,
    OracleFailureError,
    PreconditionViolatedError,
    SetTooLargeError,
    check_cap,
)
from app.services.coloring_engine import Domains, iter_colorings, solve_domains
from app.services.flexibility import ColoringDistribution
from app.services.graph_core import (
    Adjacency,
    Coloring,
    Graph,
    ListAssignment,
    Request,
    induced_adjacency,
    max_average_degree,
    remove_vertices,
    weak_reduction_sequence,
)

logger = logging.getLogger(__name__)

# 预言机：给定邻接表与各顶点的可用颜色，返回正常着色或 None
ChoosabilityOracle = Callable[[Adjacency, Domains], dict[int, int] | None]
Seed = int | np.random.SeedSequence | np.random.Generator


# ==================== 常量与数据模型 ====================
class FlexConstants(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int
    delta: Fraction
    epsilon: Fraction


def flex_constants(d: int) -> FlexConstants:
    """δ = 1/(d+2)^{d+1}，ε = δ^{d+1}"""
    if d < 0:
        raise PreconditionViolatedError(f"d 必须非负，收到 {d}")
    delta = Fraction(1, (d + 2) ** (d + 1))
    return FlexConstants(d=d, delta=delta, epsilon=delta ** (d + 1))


def madind_epsilon(d: int) -> Fraction:
    """独立集请求的保证比例 1/(2 d^{2d})"""
    return Fraction(1, 2 * d ** (2 * d))


def mad_epsilon(d: int) -> Fraction:
    """一般请求的保证比例 1/(2 (d-1) d^{2d})"""
    return Fraction(1, 2 * (d - 1) * d ** (2 * d))


class MarginalTable(BaseModel):
    """(顶点, 颜色) -> 概率"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    probabilities: dict[tuple[int, int], Fraction]

    @field_validator("probabilities")
    @classmethod
    def _check_vertex_sums(cls, value: dict[tuple[int, int], Fraction]) -> dict:
        sums: dict[int, Fraction] = {}
        for (v, _), p in value.items():
            sums[v] = sums.get(v, Fraction(0)) + p
        for v, total in sums.items():
            if total != 1:
                raise ValueError(f"顶点 {v} 的概率之和为 {total}，不为 1")
        return value

    def __getitem__(self, key: tuple[int, int]) -> Fraction:
        return self.probabilities[key]

    def minimum(self) -> Fraction:
        return min(self.probabilities.values())


class MonteCarloReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trials: int
    frequencies: MarginalTable
    total_variation: Fraction


class MadTrialReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trials: int
    mean_fraction: Fraction
    min_fraction: Fraction
    guarantee: Fraction


def make_rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


# ==================== 弱退化递归过程 ====================
def _wdeg_plan(g: Graph, lists: ListAssignment, d: int) -> list[tuple[int, ...]]:
    """返回着色顺序：规约序列的逆序（最后删去的块最先着色）"""
    lists.check_against(g)
    if d < 0:
        raise PreconditionViolatedError(f"d 必须非负，收到 {d}")
    wrong = [v for v in g.vertices if len(lists[v]) != d + 2]
    if wrong:
        raise PreconditionViolatedError(f"顶点 {wrong} 的列表大小不是 d+2={d + 2}")
    steps = weak_reduction_sequence(g.adjacency, d)
    if steps is None:
        raise PreconditionViolatedError(f"图不是弱 {d}-退化的")
    return [step.vertices for step in reversed(steps)]


def _block_options(
    adj: Adjacency, block: tuple[int, ...], lists: ListAssignment, colors: dict[int, int]
) -> list[tuple[int, ...]]:
    """
    块 P 在当前部分着色下的全部 L'-着色（按 P 的顶点升序对齐）。

    L'(v) 为 L(v) 去掉 P 外已着色邻居的颜色，且必有 |L'(v)| > deg_{G[P]}(v)。
    """
    inner = induced_adjacency(adj, block)
    reduced: dict[int, frozenset[int]] = {}
    for v in block:
        reduced[v] = lists[v] - {colors[u] for u in adj[v] if u in colors}
        if len(reduced[v]) <= len(inner[v]):
            raise InternalError(
                f"顶点 {v} 的剩余列表大小 {len(reduced[v])} 不超过块内度数 {len(inner[v])}"
            )
    options = list(iter_colorings(inner, reduced))
    if not options:
        raise InternalError(f"块 {block} 没有 L'-着色")
    return options


def sample_flex_wdeg(g: Graph, lists: ListAssignment, d: int, rng_seed: Seed) -> Coloring:
    """
    从弱退化递归过程的分布中抽取一个着色。

    依次取规范的块 P，先在 G-P 上递归着色，再在 G[P] 的全部 L'-着色中均匀抽取一个。

    Raises:
        PreconditionViolatedError: 图不是弱 d-退化的，或列表大小不是 d+2
    """
    plan = _wdeg_plan(g, lists, d)
    rng = make_rng(rng_seed)
    return _sample_with_plan(g.adjacency, lists, plan, rng)


def _sample_with_plan(
    adj: Adjacency, lists: ListAssignment, plan: list[tuple[int, ...]], rng: np.random.Generator
) -> Coloring:
    colors: dict[int, int] = {}
    for block in plan:
        options = _block_options(adj, block, lists, colors)
        choice = options[int(rng.integers(len(options)))]
        colors.update(zip(sorted(block), choice))
    return Coloring.model_construct(colors=dict(sorted(colors.items())))


def exact_distribution_flex_wdeg(
    g: Graph, lists: ListAssignment, d: int, cap: int | None = None
) -> ColoringDistribution:
    """
    精确计算递归过程输出的分布。

    Raises:
        CapExceededError: 支撑集超过 SAMPLER_SUPPORT_CAP
    """
    cap = settings.SAMPLER_SUPPORT_CAP if cap is None else cap
    plan = _wdeg_plan(g, lists, d)
    adj = g.adjacency
    states: list[tuple[dict[int, int], Fraction]] = [({}, Fraction(1))]
    for block in plan:
        order = sorted(block)
        expanded: list[tuple[dict[int, int], Fraction]] = []
        for colors, p in states:
            options = _block_options(adj, block, lists, colors)
            share = p / len(options)
            for option in options:
                extended = dict(colors)
                extended.update(zip(order, option))
                expanded.append((extended, share))
        check_cap(len(expanded), cap, "过程分布的支撑集")
        states = expanded

    merged: dict[tuple[int, ...], Fraction] = {}
    for colors, p in states:
        key = tuple(colors[v] for v in g.vertices)
        merged[key] = merged.get(key, Fraction(0)) + p
    support = [
        (Coloring.model_construct(colors=dict(zip(g.vertices, key))), p)
        for key, p in sorted(merged.items())
    ]
    logger.debug(f"过程分布的支撑集大小为 {len(support)}")
    return ColoringDistribution(support=support)


def marginal_table(g: Graph, lists: ListAssignment, dist: ColoringDistribution) -> MarginalTable:
    probabilities = {(v, c): Fraction(0) for v in g.vertices for c in sorted(lists[v])}
    for phi, p in dist.support:
        for v, c in phi.colors.items():
            probabilities[(v, c)] += p
    return MarginalTable(probabilities=probabilities)


def exact_marginals_flex_wdeg(
    g: Graph, lists: ListAssignment, d: int, cap: int | None = None
) -> MarginalTable:
    """
    精确边际概率 Prob[φ(v)=c]，并断言每一项都不小于 ε(d)。

    Raises:
        InternalError: 某个边际概率低于 ε(d)
    """
    table = marginal_table(g, lists, exact_distribution_flex_wdeg(g, lists, d, cap))
    epsilon = flex_constants(d).epsilon
    for (v, c), p in table.probabilities.items():
        if p < epsilon:
            raise InternalError(
                f"边际概率 Prob[φ({v})={c}] = {p} 低于 ε = {epsilon}",
                {"vertex": v, "color": c, "probability": str(p)},
            )
    return table


def avoidance_probability(
    g: Graph,
    lists: ListAssignment,
    d: int,
    subset: Iterable[int],
    c: int,
    dist: ColoringDistribution | None = None,
) -> Fraction:
    """
    精确计算 Prob[(∀v∈S) φ(v) ≠ c]，并断言不小于 δ^{|S|}。

    Args:
        dist: 预先算好的过程分布，省略时现场计算

    Raises:
        SetTooLargeError: |S| > d
    """
    chosen = frozenset(subset)
    if len(chosen) > d:
        raise SetTooLargeError(f"|S| = {len(chosen)} 超过 d = {d}")
    if not chosen <= set(g.vertices):
        raise PreconditionViolatedError("S 含有不在图中的顶点")
    if dist is None:
        dist = exact_distribution_flex_wdeg(g, lists, d)
    probability = sum(
        (p for phi, p in dist.support if all(phi.colors[v] != c for v in chosen)),
        Fraction(0),
    )
    bound = flex_constants(d).delta ** len(chosen)
    if probability < bound:
        raise InternalError(
            f"避色概率 {probability} 低于 δ^|S| = {bound}",
            {"subset": sorted(chosen), "color": c},
        )
    return probability


def monte_carlo_frequencies(
    g: Graph, lists: ListAssignment, d: int, seed: int, trials: int
) -> MonteCarloReport:
    """
    重复抽样并与精确分布比较。

    第 i 次试验使用 SeedSequence(seed).spawn 得到的第 i 个子种子。
    """
    if trials < 1:
        raise PreconditionViolatedError("trials 必须为正")
    plan = _wdeg_plan(g, lists, d)
    adj = g.adjacency
    counts: Counter[tuple[int, ...]] = Counter()
    for child in np.random.SeedSequence(seed).spawn(trials):
        phi = _sample_with_plan(adj, lists, plan, make_rng(child))
        counts[phi.as_tuple()] += 1

    exact = {phi.as_tuple(): p for phi, p in exact_distribution_flex_wdeg(g, lists, d).support}
    keys = set(exact) | set(counts)
    total_variation = sum(
        (abs(exact.get(key, Fraction(0)) - Fraction(counts[key], trials)) for key in keys),
        Fraction(0),
    ) / 2

    frequencies = {(v, c): Fraction(0) for v in g.vertices for c in sorted(lists[v])}
    for key, count in counts.items():
        for v, c in zip(g.vertices, key):
            frequencies[(v, c)] += Fraction(count, trials)
    logger.info(f"蒙特卡洛 {trials} 次，全变差距离 {float(total_variation):.4f}")
    return MonteCarloReport(
        trials=trials,
        frequencies=MarginalTable(probabilities=frequencies),
        total_variation=total_variation,
    )


# ==================== 最大平均度过程 ====================
class _MadPlan(NamedTuple):
    lists: dict[int, frozenset[int]]
    kept_request: dict[int, int]
    stripped: list[int]
    core: dict[int, frozenset[int]]


def _prepare_mad(
    g: Graph, lists: ListAssignment, r: Request, d: int, oracle: ChoosabilityOracle
) -> _MadPlan:
    lists.check_against(g)
    r.check_against(lists)
    if d < 2:
        raise PreconditionViolatedError(f"最大平均度过程要求 d ≥ 2，收到 {d}")
    short = [v for v in g.vertices if len(lists[v]) < d]
    if short:
        raise PreconditionViolatedError(f"顶点 {short} 的列表大小小于 d={d}")
    if g.n and max_average_degree(g) > d:
        raise PreconditionViolatedError(f"mad(G) 超过 d={d}")

    # 列表裁剪为最小的 d 种颜色；请求色总是保留
    trimmed: dict[int, frozenset[int]] = {}
    for v in g.vertices:
        keep = frozenset(sorted(lists[v])[:d])
        wanted = r.entries.get(v)
        if wanted is not None and wanted not in keep:
            keep = frozenset(sorted(lists[v] - {wanted})[: d - 1]) | {wanted}
        trimmed[v] = keep

    adj = g.adjacency
    if not r.entries:
        return _MadPlan(lists=trimmed, kept_request={}, stripped=[], core=dict(adj))

    palette = frozenset(range(1, d))
    base = oracle(adj, {v: palette for v in g.vertices})
    if base is None:
        raise OracleFailureError(f"预言机无法给出 {d - 1}-着色")
    color_classes: dict[int, list[int]] = {}
    for v in r.domain:
        color_classes.setdefault(base[v], []).append(v)
    best_color = min(color_classes, key=lambda c: (-len(color_classes[c]), c))
    kept = {v: r.entries[v] for v in color_classes[best_color]}

    # 递归删去请求域外度数小于 d 的顶点
    core = dict(adj)
    stripped: list[int] = []
    while True:
        low = [v for v in sorted(core) if v not in kept and len(core[v]) < d]
        if not low:
            break
        stripped.append(low[0])
        core = remove_vertices(core, [low[0]])
    return _MadPlan(lists=trimmed, kept_request=kept, stripped=stripped, core=core)


def _run_with_plan(
    adj: Adjacency, plan: _MadPlan, oracle: ChoosabilityOracle, rng: np.random.Generator
) -> Coloring:
    if not plan.kept_request:
        found = oracle(adj, plan.lists)
        if found is None:
            raise OracleFailureError("预言机无法在裁剪后的列表上着色")
        return Coloring(colors=dict(sorted(found.items())))

    reduced: dict[int, frozenset[int]] = {}
    for v in sorted(plan.core):
        if v in plan.kept_request:
            reduced[v] = plan.lists[v]
        else:
            palette = sorted(plan.lists[v])
            dropped = palette[int(rng.integers(len(palette)))]
            reduced[v] = plan.lists[v] - {dropped}
    found = oracle(plan.core, reduced)
    if found is None:
        raise OracleFailureError("预言机无法在随机删色后的列表上着色")
    colors = dict(found)

    requested = list(plan.kept_request)
    if any(u in plan.core[v] for v in requested for u in requested):
        raise InternalError("保留的请求域不是独立集")
    for v in requested:
        wanted = plan.kept_request[v]
        if all(colors[u] != wanted for u in plan.core[v]):
            colors[v] = wanted

    for v in reversed(plan.stripped):
        used = {colors[u] for u in adj[v] if u in colors}
        available = plan.lists[v] - used
        if not available:
            raise InternalError(f"回填顶点 {v} 时无色可用")
        colors[v] = min(available)
    return Coloring(colors=dict(sorted(colors.items())))


def run_mad_procedure(
    g: Graph,
    lists: ListAssignment,
    r: Request,
    d: int,
    choosability_oracle: ChoosabilityOracle | None = None,
    rng_seed: Seed = 0,
) -> Coloring:
    """
    最大平均度 ≤ d 的图上满足请求的随机过程。

    1. 列表裁剪为大小 d；用预言机求 (d-1)-着色，取与 dom(r) 交最大的色类作为 r_1
    2. 递归删去 dom(r_1) 外度数小于 d 的顶点
    3. 剩余的非请求顶点各随机删去一种颜色，用预言机着色
    4. 请求色未出现在邻居中的请求顶点翻转为 r(v)，再按删除的逆序贪心回填

    Raises:
        OracleFailureError: 预言机无法着色
    """
    oracle = choosability_oracle or solve_domains
    plan = _prepare_mad(g, lists, r, d, oracle)
    return _run_with_plan(g.adjacency, plan, oracle, make_rng(rng_seed))


def mad_satisfied_fraction(
    g: Graph,
    lists: ListAssignment,
    r: Request,
    d: int,
    seed: int,
    trials: int,
    choosability_oracle: ChoosabilityOracle | None = None,
) -> MadTrialReport:
    """多次运行最大平均度过程，统计被满足的请求比例"""
    if not r.entries:
        raise PreconditionViolatedError("请求为空，无法统计满足比例")
    if trials < 1:
        raise PreconditionViolatedError("trials 必须为正")
    oracle = choosability_oracle or solve_domains
    plan = _prepare_mad(g, lists, r, d, oracle)
    adj = g.adjacency
    hits: Counter[int] = Counter()
    for child in np.random.SeedSequence(seed).spawn(trials):
        phi = _run_with_plan(adj, plan, oracle, make_rng(child))
        if not phi.is_proper(g):
            raise InternalError("最大平均度过程产生了非正常着色")
        hits[sum(1 for v, c in r.entries.items() if phi[v] == c)] += 1
    size = len(r)
    mean = sum((Fraction(k * count, size) for k, count in hits.items()), Fraction(0)) / trials
    logger.info(f"最大平均度过程 {trials} 次，平均满足比例 {float(mean):.4f}")
    return MadTrialReport(
        trials=trials,
        mean_fraction=mean,
        min_fraction=Fraction(min(hits), size),
        guarantee=mad_epsilon(d),
    )
