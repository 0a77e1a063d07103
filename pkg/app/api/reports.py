"""
子命令报告构建模块

每个子命令对应一个纯函数，返回可直接 JSON 序列化的字典：
- 有理数一律写成 "p/q" 字符串
- 着色写成按顶点 1..n 排列的颜色列表
- "ok" 表示验证是否通过，命令行据此决定退出码
"""

import logging
from fractions import Fraction
from itertools import combinations

from app.api.instance_file import InstanceFile, serialize_instance
from app.core.utils import FlexError, PreconditionViolatedError, format_rational
from app.services.catalog import random_requests, random_weighted_requests
from app.services.coloring_engine import all_L_colorings, count_request_matches, max_weighted_match
from app.services.flexibility import (
    check_distribution,
    epsilon_of_request,
    expected_matched_weight,
    flexibility_exact,
    peel_weighted,
    weighted_flexibility_lp,
)
from app.services.gadget_builder import (
    GadgetConstruction,
    KnapsackSpec,
    all_ones_ratio,
    build_knapsack_graph,
    build_log_gap_instance,
    expected_realizable_sets,
    hard_request_best_ratio,
    realizable_sets,
    split_satisfy,
)
from app.services.graph_core import (
    Coloring,
    Graph,
    Request,
    WeightedRequest,
    average_degree,
    degeneracy,
    densest_subgraph,
    is_weakly_degenerate,
    max_average_degree,
    sg_threshold,
    sg_witness,
    weak_reduction_sequence,
)
from app.services.nullstellensatz import (
    MonomialQuery,
    alon_tarsi_check,
    count_signed_shiftable,
    graph_polynomial_coeff,
    request_vectors,
    verify_claim1,
)
from app.services.sampler import (
    MarginalTable,
    avoidance_probability,
    exact_distribution_flex_wdeg,
    flex_constants,
    mad_epsilon,
    mad_satisfied_fraction,
    madind_epsilon,
    marginal_table,
    monte_carlo_frequencies,
)

logger = logging.getLogger(__name__)


# ==================== 序列化辅助 ====================
def _coloring(phi: Coloring) -> list[int]:
    return [phi[v] for v in sorted(phi.colors)]


def _request(r: Request) -> list[list[int]]:
    return [[v, c] for v, c in sorted(r.entries.items())]


def _weights(w: WeightedRequest) -> list[list]:
    return [[v, c, format_rational(p)] for (v, c), p in sorted(w.weights.items())]


def _table(table: MarginalTable) -> list[list]:
    return [[v, c, format_rational(p)] for (v, c), p in sorted(table.probabilities.items())]


def _sets(family: list[frozenset[int]]) -> list[list[int]]:
    return [sorted(subset) for subset in family]


def error_report(command: str, error: FlexError) -> dict:
    """模块异常对应的报告，错误名取自异常的 error_name"""
    return {"command": command, "ok": False, **error.to_dict()}


def render_text(report: dict, indent: int = 0) -> str:
    """把报告渲染为逐行的 "键: 值" 文本"""
    lines: list[str] = []
    pad = "  " * indent
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(render_text(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(render_text(item, indent + 1))
                lines.append(f"{pad}  --")
        else:
            lines.append(f"{pad}{key}: {value}")
    return "\n".join(line for line in lines if line)


# ==================== analyze ====================
def analyze_report(g: Graph, d: int | None = None) -> dict:
    """
    退化度、弱退化度、最大平均度与放电见证。

    Args:
        d: 检查弱 d-退化与见证所用的 d，省略时取弱退化度
    """
    ordering = degeneracy(g)
    # d-退化图必为弱 d-退化，因此最小值不超过退化度
    weak = next(k for k in range(ordering.d + 1) if is_weakly_degenerate(g, k))
    target = weak if d is None else d
    sequence = weak_reduction_sequence(g.adjacency, target)

    report: dict = {
        "command": "analyze",
        "ok": True,
        "n": g.n,
        "edges": len(g.edges),
        "degeneracy": {"d": ordering.d, "order": list(ordering.order)},
        "weak_degeneracy": weak,
        "d": target,
        "weakly_degenerate": sequence is not None,
        "reduction_sequence": (
            None
            if sequence is None
            else [{"kind": step.kind.value, "vertices": list(step.vertices)} for step in sequence]
        ),
        "sg_threshold": format_rational(sg_threshold(target)),
    }
    if g.n > 0:
        vertices, density = densest_subgraph(g)
        report["average_degree"] = format_rational(average_degree(g))
        report["mad"] = format_rational(max_average_degree(g))
        report["densest_subgraph"] = {"vertices": sorted(vertices), "density": format_rational(density)}
    witness = sg_witness(g, target)
    report["sg_witness"] = None if witness is None else {"kind": witness.kind.value, "vertex": witness.vertex}
    return report


# ==================== flex / wflex ====================
def flex_report(instance: InstanceFile, cap: int | None = None) -> dict:
    """精确灵活性 ε* 与最坏请求；实例自带请求时同时给出它的满足比例"""
    result = flexibility_exact(instance.graph, instance.lists, cap)
    report = {
        "command": "flex",
        "ok": True,
        "epsilon": format_rational(result.epsilon),
        "worst_request": _request(result.worst_request),
        "requests_checked": result.requests_checked,
    }
    if instance.request is not None:
        report["request"] = {
            "entries": _request(instance.request),
            "epsilon": format_rational(epsilon_of_request(instance.graph, instance.lists, instance.request)),
        }
    return report


def wflex_report(instance: InstanceFile, cap: int | None = None) -> dict:
    """
    加权灵活性的线性规划值、最优分布与对偶加权请求。

    两项交叉检查决定 ok：分布的最小边际等于 LP 值，
    对偶请求的最佳满足比例也等于 LP 值。
    """
    g, lists = instance.graph, instance.lists
    result = weighted_flexibility_lp(g, lists, cap)
    colorings = all_L_colorings(g, lists, cap)
    min_marginal = check_distribution(g, lists, result.distribution)
    dual_best, _ = max_weighted_match(g, lists, result.dual, colorings)
    dual_ratio = dual_best / result.dual.total
    ok = min_marginal == result.epsilon and dual_ratio == result.epsilon
    if not ok:
        logger.error(f"LP 证书不一致: 值 {result.epsilon}, 最小边际 {min_marginal}, 对偶比例 {dual_ratio}")

    report = {
        "command": "wflex",
        "ok": ok,
        "epsilon": format_rational(result.epsilon),
        "colorings_enumerated": result.colorings_enumerated,
        "distribution": [
            {"coloring": _coloring(phi), "probability": format_rational(p)}
            for phi, p in result.distribution.support
        ],
        "dual": _weights(result.dual),
        "min_marginal": format_rational(min_marginal),
        "dual_best_ratio": format_rational(dual_ratio),
    }
    if instance.weights is not None:
        w = instance.weights
        best, phi = max_weighted_match(g, lists, w, colorings)
        expected = expected_matched_weight(result.distribution, w)
        report["weighted_request"] = {
            "total": format_rational(w.total),
            "expected_under_distribution": format_rational(expected),
            "best": format_rational(best),
            "best_coloring": _coloring(phi),
        }
        if w.total > 0 and best < result.epsilon * w.total:
            report["ok"] = False
    return report


# ==================== sample ====================
def sample_wdeg_exact_report(instance: InstanceFile, d: int) -> dict:
    """
    弱退化递归过程的精确边际与避色概率。

    避色概率对全部 |S| ≤ d 的顶点集和出现过的颜色逐一计算。
    """
    g, lists = instance.graph, instance.lists
    constants = flex_constants(d)
    dist = exact_distribution_flex_wdeg(g, lists, d)
    table = marginal_table(g, lists, dist)
    minimum = table.minimum() if table.probabilities else Fraction(1)

    avoidance: dict[str, str] = {}
    checked = 0
    palette = sorted(lists.colors())
    for size in range(1, min(d, g.n) + 1):
        lowest: Fraction | None = None
        for subset in combinations(g.vertices, size):
            for c in palette:
                p = avoidance_probability(g, lists, d, subset, c, dist)
                checked += 1
                lowest = p if lowest is None else min(lowest, p)
        if lowest is not None:
            avoidance[str(size)] = format_rational(lowest)

    return {
        "command": "sample",
        "procedure": "wdeg",
        "mode": "exact",
        "ok": minimum >= constants.epsilon,
        "d": d,
        "delta": format_rational(constants.delta),
        "epsilon": format_rational(constants.epsilon),
        "support_size": len(dist.support),
        "marginals": _table(table),
        "min_marginal": format_rational(minimum),
        "avoidance_cases": checked,
        "min_avoidance_by_size": avoidance,
    }


def sample_wdeg_monte_carlo_report(instance: InstanceFile, d: int, seed: int, trials: int) -> dict:
    result = monte_carlo_frequencies(instance.graph, instance.lists, d, seed, trials)
    return {
        "command": "sample",
        "procedure": "wdeg",
        "mode": "monte_carlo",
        "ok": True,
        "d": d,
        "seed": seed,
        "trials": result.trials,
        "frequencies": _table(result.frequencies),
        "total_variation": format_rational(result.total_variation),
    }


def sample_mad_report(instance: InstanceFile, d: int, seed: int, trials: int) -> dict:
    """
    最大平均度过程的经验满足比例。

    请求定义域为独立集时与 1/(2d^{2d}) 比较，否则与 1/(2(d-1)d^{2d}) 比较。
    """
    if instance.request is None:
        raise PreconditionViolatedError("mad 过程需要实例中带有请求 r")
    g, r = instance.graph, instance.request
    adj = g.adjacency
    independent = all(u not in adj[v] for u, v in combinations(r.domain, 2))
    guarantee = madind_epsilon(d) if independent else mad_epsilon(d)
    result = mad_satisfied_fraction(g, instance.lists, r, d, seed, trials)
    return {
        "command": "sample",
        "procedure": "mad",
        "ok": result.mean_fraction >= guarantee,
        "d": d,
        "seed": seed,
        "trials": result.trials,
        "request": _request(r),
        "independent_request": independent,
        "mean_fraction": format_rational(result.mean_fraction),
        "min_fraction": format_rational(result.min_fraction),
        "guarantee": format_rational(guarantee),
    }


# ==================== gadget ====================
def knapsack_instance_text(construction: GadgetConstruction) -> str:
    """带角色注释的实例文本"""
    instance = InstanceFile(graph=construction.graph, lists=construction.list_assignment)
    comments = {v: role.label() for v, role in construction.roles.items()}
    return serialize_instance(instance, comments)


def gadget_build_report(spec: KnapsackSpec) -> dict:
    construction = build_knapsack_graph(spec)
    bound = 11 * spec.n * (spec.t + 2)
    return {
        "command": "gadget build",
        "ok": construction.n_vertices < bound,
        "s": list(spec.s),
        "t": spec.t,
        "vertices": construction.n_vertices,
        "edges": len(construction.edges),
        "gadgets": len(construction.gadgets),
        "vertex_bound": bound,
        "s_vertices": list(construction.s_vertices),
    }


def gadget_verify_report(spec: KnapsackSpec) -> dict:
    """S-可实现集合必须恰为 {R : Σ_{i∈R} s_i ≤ t}"""
    construction = build_knapsack_graph(spec)
    family = realizable_sets(construction)
    expected = expected_realizable_sets(spec)
    bound = 11 * spec.n * (spec.t + 2)
    ok = family == expected and construction.n_vertices < bound
    if not ok:
        logger.error(f"可实现集合不符: 实际 {_sets(family)}, 期望 {_sets(expected)}")
    return {
        "command": "gadget verify",
        "ok": ok,
        "s": list(spec.s),
        "t": spec.t,
        "vertices": construction.n_vertices,
        "vertex_bound": bound,
        "realizable_sets": _sets(family),
        "expected_sets": _sets(expected),
        "all_ones_ratio": format_rational(all_ones_ratio(construction, family)),
    }


def gadget_loggap_report(k: int, seed: int, requests: int) -> dict:
    """
    对数间隙实例：困难加权请求的最佳比例应为 1/k，
    随机请求经 r1/r2 拆分后每个都至少满足 1/6。
    """
    construction, hard = build_log_gap_instance(k)
    ratio = hard_request_best_ratio(construction, hard)
    battery = random_requests(construction.graph, construction.list_assignment, seed, requests)
    worst = Fraction(1)
    for r in battery:
        phi = split_satisfy(construction, r)
        worst = min(worst, Fraction(count_request_matches(r, phi), len(r)))
    return {
        "command": "gadget loggap",
        "ok": ratio == Fraction(1, k) and 6 * worst >= 1,
        "k": k,
        "seed": seed,
        "vertices": construction.n_vertices,
        "hard_request": _weights(hard),
        "hard_request_best_ratio": format_rational(ratio),
        "requests_checked": len(battery),
        "min_split_ratio": format_rational(worst),
    }


# ==================== null ====================
def null_verify_report(d: int, max_n: int) -> dict:
    """
    对全部极大 d-退化构造比较 c_G(h) 的两种计算，并检查可平移双射的计数公式。
    """
    shiftable = 0
    for r in request_vectors(d, d):
        count_signed_shiftable(d, r)
        shiftable += 1
    claim = verify_claim1(d, max_n)
    ok = claim.recursive_agrees and (claim.all_minus_one or not claim.prime)
    return {
        "command": "null verify",
        "ok": ok,
        "d": d,
        "max_n": max_n,
        "prime": claim.prime,
        "graphs_checked": claim.graphs_checked,
        "cases_checked": claim.cases_checked,
        "residues": claim.residues,
        "all_minus_one": claim.all_minus_one,
        "recursive_agrees": claim.recursive_agrees,
        "shiftable_vectors_checked": shiftable,
    }


def null_coeff_report(
    g: Graph, exponents: tuple[int, ...], ordering: tuple[int, ...] | None = None, colors: int | None = None
) -> dict:
    """图多项式中一个单项式的系数；给出 colors 时附带穷举可着色性检查"""
    query = MonomialQuery(ordering=ordering or tuple(g.vertices), exponents=exponents)
    report = {
        "command": "null coeff",
        "ok": True,
        "ordering": list(query.ordering),
        "exponents": list(query.exponents),
        "coefficient": graph_polynomial_coeff(g, query),
    }
    if colors is not None:
        report["colorable_for_all_lists"] = alon_tarsi_check(g, query, colors)
        report["ok"] = report["colorable_for_all_lists"]
    return report


# ==================== peel ====================
def peel_report(
    instance: InstanceFile, seed: int | None = None, requests: int = 100, eps: Fraction | None = None
) -> dict:
    """
    用精确的请求预言机运行剥离算法。

    实例带有加权请求时只运行它；否则生成 requests 个随机加权请求。
    """
    g, lists = instance.graph, instance.lists
    if eps is None:
        eps = flexibility_exact(g, lists).epsilon
    if instance.weights is not None:
        battery = [instance.weights]
    else:
        if seed is None:
            raise PreconditionViolatedError("随机加权请求需要 seed")
        battery = random_weighted_requests(lists, seed, requests)

    results = [peel_weighted(g, lists, w, eps) for w in battery]
    ratios = [
        result.achieved_weight / result.total_weight for result in results if result.total_weight > 0
    ]
    report = {
        "command": "peel",
        "ok": all(result.round_bound_holds for result in results),
        "epsilon": format_rational(eps),
        "requests_checked": len(results),
        "max_rounds": max(result.rounds for result in results),
        "stated_bound_applicable": sum(1 for result in results if result.stated_bound_applies),
        "stated_bound_holds": sum(1 for result in results if result.stated_bound_holds),
        "min_achieved_ratio": format_rational(min(ratios)) if ratios else None,
    }
    if seed is not None:
        report["seed"] = seed
    if len(results) == 1:
        report["index_sequence"] = list(results[0].index_sequence)
        report["coloring"] = _coloring(results[0].coloring)
    return report
