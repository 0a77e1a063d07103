"""
灵活性计算服务

提供：
1. 单个请求的满足比例 epsilon_of_request
2. 精确灵活性 flexibility_exact（遍历全部非空请求）
3. 加权灵活性的线性规划：最优分布 + 对偶加权请求作为证书
4. 由非加权灵活性得到加权灵活性的剥离算法 peel_weighted
"""

import logging
from collections.abc import Callable, Iterator
from fractions import Fraction
from math import prod

from pydantic import BaseModel, ConfigDict, field_validator

from app.core.config import settings
from app.core.utils import (
    EmptyRequestError,
    InternalError,
    OracleViolationError,
    PreconditionViolatedError,
    UncolorableError,
    check_cap,
)
from app.services.coloring_engine import (
    all_L_colorings,
    count_request_matches,
    is_proper_L_coloring,
    matched_weight,
    max_request_match,
)
from app.services.graph_core import Coloring, Graph, ListAssignment, Request, WeightedRequest
from app.services.simplex import LPInstance, LPStatus, Sense, simplex_solve

logger = logging.getLogger(__name__)

RequestOracle = Callable[[Request], Coloring]


# ==================== 数据模型 ====================
class FlexReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    epsilon: Fraction
    worst_request: Request
    colorable: bool = True
    requests_checked: int = 0


class ColoringDistribution(BaseModel):
    """L-着色上的概率分布"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    support: list[tuple[Coloring, Fraction]]

    @field_validator("support")
    @classmethod
    def _check_probabilities(cls, value: list[tuple[Coloring, Fraction]]) -> list:
        if any(p < 0 for _, p in value):
            raise ValueError("概率不能为负")
        if sum((p for _, p in value), Fraction(0)) != 1:
            raise ValueError("概率之和必须恰为 1")
        return value

    def marginal(self, v: int, c: int) -> Fraction:
        return sum((p for phi, p in self.support if phi.colors[v] == c), Fraction(0))


class WeightedFlexResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    epsilon: Fraction
    distribution: ColoringDistribution
    dual: WeightedRequest
    colorings_enumerated: int


class PeelResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coloring: Coloring
    achieved_weight: Fraction
    total_weight: Fraction
    # Σ_v max_c w(v,c)
    top_weight: Fraction
    index_sequence: tuple[int, ...]
    rounds: int
    list_size: int
    round_bound_holds: bool
    # t ≤ log_{1/(1-ε)} n 时，去掉 "1 +" 的界由轮数界推出
    stated_bound_applies: bool
    stated_bound_holds: bool


# ==================== 单个请求 ====================
def epsilon_of_request(g: Graph, lists: ListAssignment, r: Request) -> Fraction:
    """
    计算请求 r 能被满足的最大比例。

    Raises:
        EmptyRequestError: dom(r) 为空
        UncolorableError: G 不可 L-着色
    """
    if not r.entries:
        raise EmptyRequestError("请求的定义域为空")
    best = max_request_match(g, lists, r)
    if best is None:
        raise UncolorableError("图不可 L-着色")
    count, _ = best
    return Fraction(count, len(r))


# ==================== 精确灵活性 ====================
def _requests_in_order(vertices: list[int], lists: ListAssignment) -> Iterator[dict[int, int]]:
    """按 (顶点, 颜色) 序列的字典序生成全部非空请求"""
    current: dict[int, int] = {}

    def extend(start: int) -> Iterator[dict[int, int]]:
        for i in range(start, len(vertices)):
            v = vertices[i]
            for c in sorted(lists[v]):
                current[v] = c
                yield current
                yield from extend(i + 1)
                del current[v]

    yield from extend(0)


def flexibility_exact(g: Graph, lists: ListAssignment, cap: int | None = None) -> FlexReport:
    """
    计算精确灵活性 ε* = min_r max_φ |{v: φ(v)=r(v)}| / |dom(r)|。

    请求按字典序遍历，只在严格更小时更新最坏请求，
    因此并列时返回字典序最小的请求。

    Raises:
        UncolorableError: G 不可 L-着色
        CapExceededError: Π(|L(v)|+1) 超过上限
    """
    cap = settings.FLEX_REQUEST_CAP if cap is None else cap
    lists.check_against(g)
    check_cap(prod(len(lists[v]) + 1 for v in g.vertices), cap, "请求枚举")
    colorings = all_L_colorings(g, lists)
    if not colorings:
        raise UncolorableError("图不可 L-着色")
    if g.n == 0:
        raise EmptyRequestError("空图没有非空请求")

    index = {v: i for i, v in enumerate(g.vertices)}
    vertices = list(g.vertices)
    worst: Fraction | None = None
    worst_request: dict[int, int] = {}
    checked = 0
    for request in _requests_in_order(vertices, lists):
        checked += 1
        size = len(request)
        positions = [(index[v], c) for v, c in request.items()]
        best = 0
        for colors in colorings:
            hits = sum(1 for i, c in positions if colors[i] == c)
            if hits > best:
                best = hits
                if best == size or (worst is not None and Fraction(best, size) >= worst):
                    break
        ratio = Fraction(best, size)
        if worst is None or ratio < worst:
            worst = ratio
            worst_request = dict(request)
            logger.debug(f"新的最坏请求 {worst_request}，比例 {ratio}")
            if worst == 0:
                break
    logger.info(f"精确灵活性: ε* = {worst}，检查了 {checked} 个请求")
    return FlexReport(
        epsilon=worst,
        worst_request=Request(entries=worst_request),
        colorable=True,
        requests_checked=checked,
    )


# ==================== 加权灵活性线性规划 ====================
def flexibility_lp_instance(
    colorings: list[tuple[int, ...]], vertices: list[int], pairs: list[tuple[int, int]]
) -> LPInstance:
    """
    以枚举出的着色为列构造线性规划。

    变量为各着色的概率 x_φ 与 ε；每个 (v,c) 一行 Σ_φ [φ(v)=c] x_φ - ε ≥ 0，
    最后一行 Σ x_φ = 1，目标为最大化 ε。
    """
    index = {v: i for i, v in enumerate(vertices)}
    matrix: list[list[Fraction]] = []
    for v, c in pairs:
        i = index[v]
        matrix.append([Fraction(int(colors[i] == c)) for colors in colorings] + [Fraction(-1)])
    matrix.append([Fraction(1)] * len(colorings) + [Fraction(0)])
    return LPInstance(
        objective=[0] * len(colorings) + [1],
        matrix=matrix,
        senses=[Sense.GE] * len(pairs) + [Sense.EQ],
        rhs=[0] * len(pairs) + [1],
    )


def weighted_flexibility_lp(g: Graph, lists: ListAssignment, cap: int | None = None) -> WeightedFlexResult:
    """
    计算加权灵活性：max_分布 min_(v,c) Prob[φ(v)=c]。

    对偶变量取负并归一化后得到加权请求 w，其最优匹配权重恰为 ε·w(G,L)，
    证明任何 ε' > ε 都不成立。

    Returns:
        WeightedFlexResult: ε、达到它的分布、对偶加权请求
    """
    lists.check_against(g)
    colorings = all_L_colorings(g, lists, cap)
    if not colorings:
        raise UncolorableError("图不可 L-着色")
    vertices = list(g.vertices)
    pairs = [(v, c) for v in vertices for c in sorted(lists[v])]
    result = simplex_solve(flexibility_lp_instance(colorings, vertices, pairs))
    if result.status != LPStatus.OPTIMAL:
        raise InternalError(f"灵活性线性规划的状态为 {result.status.value}")

    support = [
        (Coloring.model_construct(colors=dict(zip(vertices, colors))), p)
        for colors, p in zip(colorings, result.primal)
        if p > 0
    ]
    distribution = ColoringDistribution(support=support)

    raw = {pair: -y for pair, y in zip(pairs, result.dual) if y}
    total = sum(raw.values(), Fraction(0))
    if total <= 0:
        raise InternalError("对偶解的权重之和不为正")
    dual = WeightedRequest(weights={pair: weight / total for pair, weight in raw.items()})
    logger.info(f"加权灵活性: ε = {result.value}，{len(colorings)} 个着色，{result.iterations} 次转轴")
    return WeightedFlexResult(
        epsilon=result.value,
        distribution=distribution,
        dual=dual,
        colorings_enumerated=len(colorings),
    )


def check_distribution(g: Graph, lists: ListAssignment, dist: ColoringDistribution) -> Fraction:
    """
    校验分布中的着色均为 L-着色，并返回最小边际概率 min_(v,c) Prob[φ(v)=c]。

    Raises:
        InternalError: 分布中出现非 L-着色
    """
    for phi, _ in dist.support:
        if not is_proper_L_coloring(g, lists, phi):
            raise InternalError(f"分布中含有非 L-着色 {phi.colors}")
    marginals = {(v, c): Fraction(0) for v in g.vertices for c in lists[v]}
    for phi, p in dist.support:
        for v, c in phi.colors.items():
            marginals[(v, c)] += p
    return min(marginals.values())


def expected_matched_weight(dist: ColoringDistribution, w: WeightedRequest) -> Fraction:
    """分布下匹配权重的期望 E[Σ_v w(v, φ(v))]"""
    return sum((p * matched_weight(w, phi) for phi, p in dist.support), Fraction(0))


# ==================== 剥离算法 ====================
def exact_request_oracle(g: Graph, lists: ListAssignment) -> RequestOracle:
    """返回精确的请求预言机：对每个请求给出匹配数最多的着色"""

    def oracle(r: Request) -> Coloring:
        best = max_request_match(g, lists, r)
        if best is None:
            raise UncolorableError("图不可 L-着色")
        return best[1]

    return oracle


def log_at_least(n: int, eps: Fraction, x: Fraction) -> bool:
    """
    精确判断 log_{1/(1-eps)} n ≥ x（x ≥ 0 为有理数）。

    log_b n ≥ p/q 当且仅当 n^q (1-eps)^p ≥ 1；eps = 1 时 (1-eps)^p 在 p > 0 时为 0。

    Raises:
        PreconditionViolatedError: eps 不在 (0, 1] 中，此时底数无定义
    """
    if not 0 < eps <= 1:
        raise PreconditionViolatedError(f"eps 必须在 (0, 1] 中，收到 {eps}")
    p, q = x.numerator, x.denominator
    return Fraction(n) ** q * (1 - eps) ** p >= 1


def peel_weighted(
    g: Graph,
    lists: ListAssignment,
    w: WeightedRequest,
    eps: Fraction,
    flex_oracle: RequestOracle | None = None,
) -> PeelResult:
    """
    由 ε-灵活性构造满足加权请求的着色。

    每个顶点取权重最大的颜色 c_v，按 w(v, c_v) 降序排列（并列按编号），
    对前缀请求 r_k 调用预言机；从 n_0 = n 开始令 n_i = n_{i-1} - |M_{n_{i-1}}|，
    在 φ_{n_0}, φ_{n_1}, ... 中取匹配权重最大的一个。

    可证明的保证为 achieved ≥ W/t ≥ w(G,L)/(ℓ t)，其中 t ≤ 1 + log_{1/(1-ε)} n；
    去掉 "1 +" 的形式 achieved ≥ w(G,L)/(ℓ log_{1/(1-ε)} n) 在 t ≤ log_{1/(1-ε)} n 时断言，
    其余情况（例如 n = 1 或 eps = 1）只报告。

    Raises:
        PreconditionViolatedError: 列表大小不一致，或 eps 不在 (0, 1] 中
        OracleViolationError: 预言机返回的着色匹配不足 eps·k 个顶点
        InternalError: 轮数界或适用时的陈述界不成立
    """
    lists.check_against(g)
    w.check_against(lists)
    sizes = lists.sizes()
    if len(sizes) != 1:
        raise PreconditionViolatedError(f"列表大小必须一致，实际为 {sorted(sizes)}")
    if not 0 < eps <= 1:
        raise PreconditionViolatedError(f"eps 必须在 (0, 1] 中，收到 {eps}")
    if g.n == 0:
        raise PreconditionViolatedError("空图上没有可剥离的顶点")
    list_size = sizes.pop()
    oracle = flex_oracle or exact_request_oracle(g, lists)

    best_color = {v: max(sorted(lists[v]), key=lambda c: w.weight(v, c)) for v in g.vertices}
    ordered = sorted(g.vertices, key=lambda v: (-w.weight(v, best_color[v]), v))
    top_weight = sum((w.weight(v, best_color[v]) for v in ordered), Fraction(0))

    indices: list[int] = []
    candidates: list[Coloring] = []
    k = g.n
    while k > 0:
        prefix = Request(entries={v: best_color[v] for v in ordered[:k]})
        phi = oracle(prefix)
        matches = count_request_matches(prefix, phi)
        if matches < eps * k:
            raise OracleViolationError(
                f"预言机对长度 {k} 的前缀请求只匹配了 {matches} 个顶点",
                {"k": k, "matches": matches, "eps": str(eps)},
            )
        indices.append(k)
        candidates.append(phi)
        k -= matches
    rounds = len(indices)

    weights = [matched_weight(w, phi) for phi in candidates]
    best_index = max(range(rounds), key=lambda i: (weights[i], -i))
    achieved = weights[best_index]
    total = w.total

    round_bound_holds = log_at_least(g.n, eps, Fraction(rounds - 1)) and achieved * rounds >= top_weight
    if not round_bound_holds:
        raise InternalError(
            "剥离算法违反了轮数界",
            {"rounds": rounds, "achieved": str(achieved), "top_weight": str(top_weight)},
        )
    stated_bound_applies = log_at_least(g.n, eps, Fraction(rounds))
    if total == 0:
        stated_bound_holds = True
    elif achieved == 0:
        stated_bound_holds = False
    else:
        stated_bound_holds = log_at_least(g.n, eps, total / (list_size * achieved))
    if stated_bound_applies and not stated_bound_holds:
        raise InternalError(
            "剥离算法在 t ≤ log n 时违反了陈述的界",
            {"rounds": rounds, "achieved": str(achieved), "total": str(total)},
        )
    logger.debug(f"剥离完成: {rounds} 轮, 序列 {indices}, 权重 {achieved}/{total}")
    return PeelResult(
        coloring=candidates[best_index],
        achieved_weight=achieved,
        total_weight=total,
        top_weight=top_weight,
        index_sequence=tuple(indices),
        rounds=rounds,
        list_size=list_size,
        round_bound_holds=round_bound_holds,
        stated_bound_applies=stated_bound_applies,
        stated_bound_holds=stated_bound_holds,
    )
