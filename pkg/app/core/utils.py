"""
工具函数模块

提供统一的异常体系以及精确有理数的辅助函数。
"""

import logging
from fractions import Fraction

logger = logging.getLogger(__name__)


# ==================== 异常体系 ====================
class FlexError(Exception):
    """所有领域异常的基类"""

    error_name = "FlexError"

    def __init__(self, message: str, details: dict | None = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> dict:
        """转换为报告中使用的字典"""
        return {"error": self.error_name, "message": self.message, "details": self.details}

    def __reduce__(self):
        # 子类的构造参数各不相同，Celery 传递任务异常时按属性重建
        return _restore_error, (type(self), self.message, dict(self.__dict__))


def _restore_error(cls: type[FlexError], message: str, state: dict) -> FlexError:
    error = cls.__new__(cls)
    Exception.__init__(error, message)
    error.__dict__.update(state)
    return error


class EmptyGraphError(FlexError):
    error_name = "EmptyGraph"


class PreconditionViolatedError(FlexError):
    error_name = "PreconditionViolated"


class UncolorableError(FlexError):
    error_name = "Uncolorable"


class EmptyRequestError(FlexError):
    error_name = "EmptyRequest"


class CapExceededError(FlexError):
    """规模超过配置上限"""

    error_name = "CapExceeded"

    def __init__(self, message: str, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(message, {"size": size, "cap": cap})


class OracleViolationError(FlexError):
    error_name = "OracleViolation"


class OracleFailureError(FlexError):
    error_name = "OracleFailure"


class InternalError(FlexError):
    """内部断言失败：出现即意味着某个定理被证伪或实现有误"""

    error_name = "InternalError"


class SetTooLargeError(FlexError):
    error_name = "SetTooLarge"


class BadEndpointListError(FlexError):
    error_name = "BadEndpointList"


class BadRequestError(FlexError):
    error_name = "BadRequest"


class NotDegenerateError(FlexError):
    error_name = "NotDegenerate"


class NotPrimeError(FlexError):
    error_name = "NotPrime"


class UsageError(FlexError):
    """命令行参数错误"""

    error_name = "UsageError"


class ParseError(FlexError):
    """实例文件语法错误"""

    error_name = "ParseError"

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"第 {line} 行: {message}", {"line": line})


class SemanticError(FlexError):
    """实例文件语义错误（越界的边、不在列表中的请求颜色、负权重等）"""

    error_name = "SemanticError"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"第 {line} 行: " if line is not None else ""
        super().__init__(prefix + message, {"line": line})


# ==================== 有理数辅助函数 ====================
def format_rational(value: Fraction | int) -> str:
    """
    将有理数格式化为 "p/q" 字符串（整数也写成 "p/1"）。

    Args:
        value: 有理数或整数

    Returns:
        str: "p/q" 格式的字符串
    """
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """
    解析 "p/q" 或 "p" 格式的有理数。

    Raises:
        ValueError: 格式不合法或分母为零
    """
    text = text.strip()
    if not text or any(c.isspace() for c in text):
        raise ValueError(f"非法的有理数: {text!r}")
    if "/" in text:
        p, _, q = text.partition("/")
        if not q or "/" in q:
            raise ValueError(f"非法的有理数: {text!r}")
        return Fraction(int(p), int(q))
    return Fraction(int(text))


def is_prime(n: int) -> bool:
    """试除法判断素数（只用于很小的 d+1）"""
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def check_cap(size: int, cap: int, what: str) -> None:
    """超过上限时抛出 CapExceededError"""
    if size > cap:
        logger.warning(f"{what} 规模 {size} 超过上限 {cap}")
        raise CapExceededError(f"{what} 规模 {size} 超过上限 {cap}", size=size, cap=cap)
