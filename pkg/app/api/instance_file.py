"""
实例文件格式

按行解析的文本格式：

    graph <n>              # 文件头，必须在最前
    e <u> <v>              # 边
    L <v> <c1> <c2> ...    # 列表
    r <v> <c>              # 请求
    w <v> <c> <p>/<q>      # 加权请求

"#" 之后为注释。文件头之后各行顺序任意，重复声明视为错误。
"""

import logging
from fractions import Fraction

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from app.core.utils import ParseError, SemanticError, format_rational, parse_rational
from app.services.graph_core import Graph, ListAssignment, Request, WeightedRequest

logger = logging.getLogger(__name__)


class InstanceFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    graph: Graph
    lists: ListAssignment
    request: Request | None = None
    weights: WeightedRequest | None = None

    @field_validator("request")
    @classmethod
    def _drop_empty_request(cls, value: Request | None) -> Request | None:
        return value if value is not None and value.entries else None

    @field_validator("weights")
    @classmethod
    def _drop_empty_weights(cls, value: WeightedRequest | None) -> WeightedRequest | None:
        return value if value is not None and value.weights else None


def _integers(tokens: list[str], line: int) -> list[int]:
    try:
        return [int(token) for token in tokens]
    except ValueError:
        raise ParseError(f"需要整数，收到 {' '.join(tokens)}", line) from None


def parse_instance(text: str) -> InstanceFile:
    """
    解析实例文本。

    Raises:
        ParseError: 语法错误或重复声明
        SemanticError: 端点越界、请求色不在列表中、负权重等
    """
    n: int | None = None
    edges: dict[tuple[int, int], int] = {}
    lists: dict[int, frozenset[int]] = {}
    list_lines: dict[int, int] = {}
    requests: dict[int, tuple[int, int]] = {}
    weights: dict[tuple[int, int], tuple[Fraction, int]] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        keyword, *args = content.split()

        if keyword == "graph":
            if n is not None:
                raise ParseError("重复的 graph 文件头", number)
            if len(args) != 1:
                raise ParseError("graph 需要一个参数", number)
            (n,) = _integers(args, number)
            if n < 0:
                raise SemanticError("顶点数不能为负", number)
            continue
        if n is None:
            raise ParseError("文件必须以 graph <n> 开头", number)

        if keyword == "e":
            if len(args) != 2:
                raise ParseError("e 需要两个参数", number)
            u, v = _integers(args, number)
            if not (1 <= u <= n and 1 <= v <= n):
                raise SemanticError(f"边 ({u}, {v}) 的端点不在 1..{n} 中", number)
            if u == v:
                raise SemanticError(f"不允许自环 ({u}, {v})", number)
            key = (min(u, v), max(u, v))
            if key in edges:
                raise ParseError(f"重复的边 {key}，首次出现在第 {edges[key]} 行", number)
            edges[key] = number
        elif keyword == "L":
            if len(args) < 2:
                raise ParseError("L 需要顶点和至少一种颜色", number)
            v, *colors = _integers(args, number)
            if not 1 <= v <= n:
                raise SemanticError(f"顶点 {v} 不在 1..{n} 中", number)
            if v in lists:
                raise ParseError(f"顶点 {v} 的列表重复声明", number)
            if len(set(colors)) != len(colors) or any(c < 1 for c in colors):
                raise SemanticError(f"L({v}) 的颜色必须是互不相同的正整数", number)
            lists[v] = frozenset(colors)
            list_lines[v] = number
        elif keyword == "r":
            if len(args) != 2:
                raise ParseError("r 需要两个参数", number)
            v, c = _integers(args, number)
            if v in requests:
                raise ParseError(f"顶点 {v} 的请求重复声明", number)
            requests[v] = (c, number)
        elif keyword == "w":
            if len(args) != 3:
                raise ParseError("w 需要三个参数", number)
            v, c = _integers(args[:2], number)
            try:
                weight = parse_rational(args[2])
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"非法的有理数 {args[2]}", number) from None
            if (v, c) in weights:
                raise ParseError(f"权重 w({v},{c}) 重复声明", number)
            if weight < 0:
                raise SemanticError(f"权重 w({v},{c}) 为负", number)
            weights[(v, c)] = (weight, number)
        else:
            raise ParseError(f"未知的关键字 {keyword!r}", number)

    if n is None:
        raise ParseError("缺少 graph 文件头", 1)
    missing = [v for v in range(1, n + 1) if v not in lists]
    if missing:
        raise SemanticError(f"顶点 {missing} 没有列表")
    for v, (c, number) in requests.items():
        if v not in lists or c not in lists[v]:
            raise SemanticError(f"请求色 r({v})={c} 不在 L({v}) 中", number)
    for (v, c), (_, number) in weights.items():
        if v not in lists or c not in lists[v]:
            raise SemanticError(f"权重的键 ({v},{c}) 不满足 c ∈ L(v)", number)

    try:
        instance = InstanceFile(
            graph=Graph(n=n, edges=list(edges)),
            lists=ListAssignment(lists=lists),
            request=Request(entries={v: c for v, (c, _) in requests.items()}),
            weights=WeightedRequest(weights={key: weight for key, (weight, _) in weights.items()}),
        )
    except ValidationError as e:
        raise SemanticError(f"实例不合法: {e.errors()[0]['msg']}") from e
    logger.debug(f"解析实例: {n} 个顶点, {len(edges)} 条边, {len(requests)} 个请求")
    return instance


def serialize_instance(instance: InstanceFile, role_comments: dict[int, str] | None = None) -> str:
    """
    按规范顺序输出实例文本：文件头、边、列表、请求、权重。

    Args:
        role_comments: 顶点 -> 注释，附在对应的 L 行末尾
    """
    role_comments = role_comments or {}
    lines = [f"graph {instance.graph.n}"]
    lines.extend(f"e {u} {v}" for u, v in instance.graph.sorted_edges())
    for v in sorted(instance.lists.lists):
        line = "L " + " ".join(str(x) for x in [v, *sorted(instance.lists[v])])
        if v in role_comments:
            line += f"  # {role_comments[v]}"
        lines.append(line)
    if instance.request is not None:
        lines.extend(f"r {v} {c}" for v, c in sorted(instance.request.entries.items()))
    if instance.weights is not None:
        lines.extend(
            f"w {v} {c} {format_rational(weight)}"
            for (v, c), weight in sorted(instance.weights.weights.items())
        )
    return "\n".join(lines) + "\n"
