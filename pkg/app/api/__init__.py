"""
API module initialization.

实例文件格式与子命令报告。
"""

from app.api.instance_file import InstanceFile, parse_instance, serialize_instance
from app.api.reports import error_report, render_text

__all__ = [
    "InstanceFile",
    "parse_instance",
    "serialize_instance",
    "error_report",
    "render_text",
]
