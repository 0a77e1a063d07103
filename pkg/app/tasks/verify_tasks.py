"""
验证任务 Celery 模块

验收扫描（全部小图、全部列表分配）耗时较长，可以作为后台任务运行：
1. 解析参数：复用命令行的参数解析与校验
2. 计算：调用对应子命令的报告构建函数
3. 保存：报告写入 RESULT_DIR/<task_id>/report.json
4. 失败时清理结果目录
"""

import json
import logging
import shutil
from pathlib import Path

from celery import states

from app.core.config import settings
from app.core.utils import FlexError
from app.tasks.celery_app import celery_app

logger = logging.getLogger(__name__)


def update_task_progress(task, step: str, progress: int = 0):
    """
    更新任务进度状态

    Args:
        task: Celery 任务实例
        step: 当前步骤描述
        progress: 进度百分比 (0-100)
    """
    # 直接调用或 eager 执行时没有可更新的结果后端
    if not task.request.called_directly and not task.request.is_eager:
        task.update_state(
            state="PROGRESS",
            meta={
                "step": step,
                "progress": progress,
            },
        )
    logger.info(f"任务进度: {step} ({progress}%)")


def cleanup_results(task_id: str):
    """
    删除任务的结果目录

    Args:
        task_id: 任务 ID
    """
    result_dir = settings.RESULT_DIR / task_id
    if result_dir.exists():
        try:
            shutil.rmtree(result_dir)
            logger.info(f"已清理结果目录: {result_dir}")
        except OSError as e:
            logger.warning(f"清理结果目录失败: {e}")


def save_report(task_id: str, report: dict) -> Path:
    """把报告写为按键排序的 JSON"""
    settings.ensure_directories()
    result_dir = settings.RESULT_DIR / task_id
    result_dir.mkdir(exist_ok=True)
    path = result_dir / "report.json"
    path.write_text(json.dumps(report, sort_keys=True, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path


def _mark_failed(task, meta: dict):
    if not task.request.called_directly and not task.request.is_eager:
        task.update_state(state=states.FAILURE, meta=meta)


@celery_app.task(bind=True, name="run_verification_task")
def run_verification_task(self, task_id: str, argv: list[str]) -> dict:
    """
    在后台运行一个子命令

    Args:
        task_id: 任务唯一标识
        argv: 子命令参数，例如 ["null", "verify", "--d", "2", "--max-n", "6"]

    Returns:
        dict: 包含任务结果的字典
            - task_id: 任务 ID
            - status: 状态
            - ok: 验证是否通过
            - report_file: 报告路径
    """
    # 延迟导入：命令行模块在 submit 时会导入本模块
    from app.main import build_report

    try:
        logger.info(f"{'='*50}")
        logger.info(f"开始验证任务: {task_id}")
        logger.info(f"参数: {' '.join(argv)}")
        logger.info(f"{'='*50}")

        update_task_progress(self, "计算报告", 10)
        report = build_report(argv)

        update_task_progress(self, "保存报告", 90)
        path = save_report(task_id, report)

        update_task_progress(self, "完成", 100)
        result = {
            "task_id": task_id,
            "status": "SUCCESS",
            "ok": report["ok"],
            "report_file": str(path),
        }

        logger.info(f"{'='*50}")
        logger.info(f"任务完成: {task_id}, 验证{'通过' if report['ok'] else '未通过'}")
        logger.info(f"{'='*50}")
        return result

    except FlexError as e:
        # 用法错误、解析错误或模块异常
        logger.exception(f"验证失败: {task_id}")
        _mark_failed(self, {"error": e.error_name, "message": e.message, "step": "计算报告"})
        cleanup_results(task_id)
        raise

    except Exception as e:
        logger.exception(f"任务失败: {task_id}")
        _mark_failed(self, {"error": str(e), "step": "未知"})
        cleanup_results(task_id)
        raise
