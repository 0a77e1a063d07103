"""
精确有理数单纯形法

两阶段表格单纯形，全部运算使用 Fraction，按 Bland 规则选主元（保证终止）。
返回原始解与对偶解；不可行 / 无界作为状态值返回而非异常。

标准化步骤：
1. 按变量上下界做代换（平移、取反或拆分自由变量），有限上界变为额外的行
2. 不等式行加松弛变量，右端为负的行整体取反
3. 每行加一个人工变量作为初始基
"""

import logging
from enum import Enum
from fractions import Fraction

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)


class Sense(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class LPStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


Bound = tuple[Fraction | None, Fraction | None]


class LPInstance(BaseModel):
    """
    线性规划 max c·x, s.t. A x (<=|>=|=) b, lo ≤ x ≤ hi

    bounds 省略时所有变量取 (0, None)，即非负。
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    objective: list[Fraction]
    matrix: list[list[Fraction]]
    senses: list[Sense]
    rhs: list[Fraction]
    bounds: list[Bound] | None = None

    @field_validator("objective", "rhs", mode="before")
    @classmethod
    def _coerce_vector(cls, value: list) -> list[Fraction]:
        return [Fraction(x) for x in value]

    @field_validator("matrix", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: list) -> list[list[Fraction]]:
        return [[Fraction(x) for x in row] for row in value]

    @field_validator("bounds", mode="before")
    @classmethod
    def _coerce_bounds(cls, value: list | None) -> list[Bound] | None:
        if value is None:
            return None
        return [
            (None if lo is None else Fraction(lo), None if hi is None else Fraction(hi))
            for lo, hi in value
        ]

    @model_validator(mode="after")
    def _check_dimensions(self) -> "LPInstance":
        width = len(self.objective)
        if any(len(row) != width for row in self.matrix):
            raise ValueError("约束矩阵的列数与目标向量长度不一致")
        if not len(self.matrix) == len(self.senses) == len(self.rhs):
            raise ValueError("约束行数、方向数与右端项数不一致")
        if self.bounds is not None and len(self.bounds) != width:
            raise ValueError("变量界的个数与变量数不一致")
        return self

    @property
    def variable_bounds(self) -> list[Bound]:
        return self.bounds if self.bounds is not None else [(Fraction(0), None)] * len(self.objective)


class LPResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    status: LPStatus
    value: Fraction | None = None
    primal: list[Fraction] = Field(default_factory=list)
    # 每个约束行一个对偶值；max 问题中 <= 行非负、>= 行非正
    dual: list[Fraction] = Field(default_factory=list)
    iterations: int = 0


class _Tableau:
    """表格与基，rows[k] 的最后一列为右端项"""

    def __init__(self, rows: list[list[Fraction]], basis: list[int]):
        self.rows = rows
        self.basis = basis
        self.iterations = 0

    def pivot(self, k: int, j: int) -> None:
        row = self.rows[k]
        factor = row[j]
        row[:] = [x / factor for x in row]
        for i, other in enumerate(self.rows):
            if i != k and other[j] != 0:
                scale = other[j]
                other[:] = [a - scale * b for a, b in zip(other, row)]
        self.basis[k] = j
        self.iterations += 1

    def run(self, costs: list[Fraction], allowed: range) -> LPStatus:
        """以 costs 为目标最大化，只允许 allowed 中的列入基"""
        while True:
            basic = set(self.basis)
            basis_costs = [costs[b] for b in self.basis]
            entering = None
            for j in allowed:
                if j in basic:
                    continue
                reduced = costs[j] - sum(
                    (cb * row[j] for cb, row in zip(basis_costs, self.rows) if cb and row[j]),
                    Fraction(0),
                )
                if reduced > 0:
                    entering = j
                    break
            if entering is None:
                return LPStatus.OPTIMAL

            leaving = None
            best_ratio = None
            for k, row in enumerate(self.rows):
                if row[entering] > 0:
                    ratio = row[-1] / row[entering]
                    if (
                        best_ratio is None
                        or ratio < best_ratio
                        or (ratio == best_ratio and self.basis[k] < self.basis[leaving])
                    ):
                        leaving, best_ratio = k, ratio
            if leaving is None:
                return LPStatus.UNBOUNDED
            self.pivot(leaving, entering)


def simplex_solve(lp: LPInstance) -> LPResult:
    """
    精确求解线性规划。

    Args:
        lp: 线性规划实例（最大化）

    Returns:
        LPResult: 状态、最优值、原始解与对偶解
    """
    # ==================== 变量代换 ====================
    # 原变量 j = offset + Σ coef * 新变量
    substitutions: list[tuple[Fraction, list[tuple[int, int]]]] = []
    bound_rows: list[tuple[int, Fraction]] = []
    width = 0
    for lo, hi in lp.variable_bounds:
        if lo is not None and hi is not None and hi < lo:
            logger.debug(f"变量界 [{lo}, {hi}] 为空")
            return LPResult(status=LPStatus.INFEASIBLE)
        if lo is not None:
            substitutions.append((lo, [(width, 1)]))
            if hi is not None:
                bound_rows.append((width, hi - lo))
            width += 1
        elif hi is not None:
            substitutions.append((hi, [(width, -1)]))
            width += 1
        else:
            substitutions.append((Fraction(0), [(width, 1), (width + 1, -1)]))
            width += 2

    rows: list[tuple[list[Fraction], Sense, Fraction]] = []
    for coefficients, sense, b in zip(lp.matrix, lp.senses, lp.rhs):
        row = [Fraction(0)] * width
        shift = Fraction(0)
        for a, (offset, terms) in zip(coefficients, substitutions):
            if a:
                shift += a * offset
                for index, sign in terms:
                    row[index] += a * sign
        rows.append((row, sense, b - shift))
    for index, limit in bound_rows:
        row = [Fraction(0)] * width
        row[index] = Fraction(1)
        rows.append((row, Sense.LE, limit))

    costs = [Fraction(0)] * width
    for c, (_, terms) in zip(lp.objective, substitutions):
        for index, sign in terms:
            costs[index] += c * sign

    # ==================== 松弛、取反与人工变量 ====================
    m = len(rows)
    slack_count = sum(1 for _, sense, _ in rows if sense != Sense.EQ)
    art_start = width + slack_count
    total = art_start + m
    tableau_rows: list[list[Fraction]] = []
    flipped: list[bool] = []
    slack = width
    for k, (row, sense, b) in enumerate(rows):
        full = row + [Fraction(0)] * (slack_count + m) + [b]
        if sense == Sense.LE:
            full[slack] = Fraction(1)
            slack += 1
        elif sense == Sense.GE:
            full[slack] = Fraction(-1)
            slack += 1
        flip = b < 0
        if flip:
            full = [-x for x in full]
        full[art_start + k] = Fraction(1)
        tableau_rows.append(full)
        flipped.append(flip)

    tableau = _Tableau(tableau_rows, list(range(art_start, total)))

    # ==================== 第一阶段 ====================
    phase_one = [Fraction(0)] * art_start + [Fraction(-1)] * m
    tableau.run(phase_one, range(total))
    infeasibility = sum(
        (row[-1] for row, b in zip(tableau.rows, tableau.basis) if b >= art_start), Fraction(0)
    )
    if infeasibility > 0:
        logger.debug(f"第一阶段结束时人工变量之和为 {infeasibility}，问题不可行")
        return LPResult(status=LPStatus.INFEASIBLE, iterations=tableau.iterations)

    # 把零水平的人工变量换出基；冗余行保留，它的人工变量在第二阶段始终为零
    for k in range(m):
        if tableau.basis[k] >= art_start:
            for j in range(art_start):
                if tableau.rows[k][j] != 0:
                    tableau.pivot(k, j)
                    break

    # ==================== 第二阶段 ====================
    phase_two = costs + [Fraction(0)] * (slack_count + m)
    status = tableau.run(phase_two, range(art_start))
    if status == LPStatus.UNBOUNDED:
        return LPResult(status=status, iterations=tableau.iterations)

    values = [Fraction(0)] * total
    for row, b in zip(tableau.rows, tableau.basis):
        values[b] = row[-1]
    primal = [
        offset + sum((values[index] * sign for index, sign in terms), Fraction(0))
        for offset, terms in substitutions
    ]

    # y = c_B B^{-1}：B^{-1} 的列就是人工变量所在的列
    basis_costs = [phase_two[b] for b in tableau.basis]
    dual: list[Fraction] = []
    for k in range(len(lp.matrix)):
        y = sum(
            (cb * row[art_start + k] for cb, row in zip(basis_costs, tableau.rows) if cb),
            Fraction(0),
        )
        dual.append(-y if flipped[k] else y)

    value = sum((c * x for c, x in zip(lp.objective, primal)), Fraction(0))
    logger.debug(f"单纯形法完成: 最优值 {value}, {tableau.iterations} 次转轴")
    return LPResult(
        status=LPStatus.OPTIMAL,
        value=value,
        primal=primal,
        dual=dual,
        iterations=tableau.iterations,
    )
