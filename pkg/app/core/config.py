"""
应用配置模块

使用 Pydantic BaseSettings 管理所有配置项，支持环境变量覆盖。
各算法的规模上限（枚举上限、系数展开上限等）都集中在这里。
"""

from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用配置类"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # ==================== 基础路径配置 ====================
    BASE_DIR: Path = Path(__file__).resolve().parent.parent.parent
    RESULT_DIR: Path = BASE_DIR / "results"

    # ==================== 日志配置 ====================
    LOG_LEVEL: str = "INFO"

    # ==================== Celery 配置 ====================
    CELERY_BROKER_URL: str = "redis://localhost:6379/0"
    CELERY_RESULT_BACKEND: str = "redis://localhost:6379/0"

    # ==================== 着色枚举上限 ====================
    # flexibility_exact 最多评估的请求数
    FLEX_REQUEST_CAP: int = 10**6
    # LP 列 / 全枚举扫描时最多枚举的 L-着色数
    COLORING_ENUMERATION_CAP: int = 200_000

    # ==================== 随机过程上限 ====================
    # 精确分布的支撑集大小上限
    SAMPLER_SUPPORT_CAP: int = 200_000

    # ==================== 多项式系数上限 ====================
    # 拒绝 Π(e_i + 1) 超过该值的系数查询
    COEFF_MONOMIAL_CAP: int = 10**7
    NULL_MAX_D: int = 7
    NULL_MAX_VERTICES: int = 8

    # ==================== 构造规模上限 ====================
    GADGET_MAX_N: int = 4
    GADGET_MAX_T: int = 4
    LOG_GAP_MAX_K: int = 3

    # 少于 12 个顶点时同时穷举子图计算 mad
    MAD_EXHAUSTIVE_MAX_VERTICES: int = 11

    def ensure_directories(self) -> None:
        """确保结果目录存在"""
        self.RESULT_DIR.mkdir(parents=True, exist_ok=True)


@lru_cache
def get_settings() -> Settings:
    """获取配置单例"""
    return Settings()


# 全局配置实例
settings = get_settings()
