"""
命令行主模块

列表着色灵活性验证工具的入口。每个子命令读取实例文件或构造参数，
调用 services 中的算法并输出报告：默认为文本，--json 时输出按键排序的 JSON。

退出码：
    0  验证通过
    1  验证失败或模块报错（报告中给出错误名）
    2  用法错误或实例文件解析错误
"""

import argparse
import json
import logging
import sys
import uuid
from collections.abc import Callable
from pathlib import Path

from pydantic import ValidationError

from app.api import reports
from app.api.instance_file import InstanceFile, parse_instance
from app.core.config import settings
from app.core.utils import (
    FlexError,
    InternalError,
    ParseError,
    SemanticError,
    UsageError,
    parse_rational,
)
from app.services.gadget_builder import KnapsackSpec, build_knapsack_graph

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


# ==================== 参数解析 ====================
class _Parser(argparse.ArgumentParser):
    """参数错误抛出 UsageError 而不是直接退出"""

    def error(self, message: str):
        raise UsageError(message)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要逗号分隔的整数，收到 {text!r}") from None


def _rational(text: str):
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"非法的有理数 {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flexcolor", description="列表着色灵活性的精确验证工具")
    parser.add_argument("--json", action="store_true", help="输出 JSON 报告")
    parser.add_argument("--log-level", default=None, help=f"日志级别（默认 {settings.LOG_LEVEL}）")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", help="退化度、弱退化度、mad 与见证顶点")
    analyze.add_argument("instance", type=Path)
    analyze.add_argument("--d", type=int, default=None)

    flex = commands.add_parser("flex", help="精确灵活性 ε* 与最坏请求")
    flex.add_argument("instance", type=Path)
    flex.add_argument("--cap", type=int, default=None)

    wflex = commands.add_parser("wflex", help="加权灵活性线性规划")
    wflex.add_argument("instance", type=Path)
    wflex.add_argument("--cap", type=int, default=None)

    sample = commands.add_parser("sample", help="随机过程的边际概率")
    sample.add_argument("instance", type=Path)
    sample.add_argument("--d", type=int, required=True)
    sample.add_argument("--procedure", choices=["wdeg", "mad"], default="wdeg")
    sample.add_argument("--exact", action="store_true", help="精确计算分布（仅 wdeg）")
    sample.add_argument("--seed", type=int, default=None)
    sample.add_argument("--trials", type=int, default=1000)

    gadget = commands.add_parser("gadget", help="背包小工具构造")
    gadget_actions = gadget.add_subparsers(dest="action", required=True)
    build = gadget_actions.add_parser("build")
    build.add_argument("--s", type=_int_list, required=True)
    build.add_argument("--t", type=int, required=True)
    build.add_argument("--output", type=Path, default=None, help="写出带角色注释的实例文件")
    verify = gadget_actions.add_parser("verify")
    verify.add_argument("--s", type=_int_list, required=True)
    verify.add_argument("--t", type=int, required=True)
    verify.add_argument("--n", type=int, default=None)
    loggap = gadget_actions.add_parser("loggap")
    loggap.add_argument("--k", type=int, required=True)
    loggap.add_argument("--seed", type=int, default=None)
    loggap.add_argument("--requests", type=int, default=100)

    null = commands.add_parser("null", help="图多项式系数与 c_G(h)")
    null_actions = null.add_subparsers(dest="action", required=True)
    claim = null_actions.add_parser("verify")
    claim.add_argument("--d", type=int, required=True)
    claim.add_argument("--max-n", type=int, required=True)
    coeff = null_actions.add_parser("coeff")
    coeff.add_argument("instance", type=Path)
    coeff.add_argument("--exponents", type=_int_list, required=True)
    coeff.add_argument("--ordering", type=_int_list, default=None)
    coeff.add_argument("--colors", type=int, default=None)

    peel = commands.add_parser("peel", help="由灵活性构造加权请求的着色")
    peel.add_argument("instance", type=Path)
    peel.add_argument("--seed", type=int, default=None)
    peel.add_argument("--requests", type=int, default=100)
    peel.add_argument("--eps", type=_rational, default=None)

    submit = commands.add_parser("submit", help="把子命令作为后台任务提交")
    submit.add_argument("argv", nargs=argparse.REMAINDER)
    return parser


def parse_arguments(argv: list[str]) -> argparse.Namespace:
    """
    解析并校验参数。

    Raises:
        UsageError: 参数不合法，或随机子命令缺少 --seed
    """
    args = build_parser().parse_args(argv)
    stochastic = (
        (args.command == "sample" and not (args.procedure == "wdeg" and args.exact))
        or (args.command == "gadget" and args.action == "loggap")
    )
    if stochastic and args.seed is None:
        raise UsageError("随机子命令必须给出 --seed")
    if args.command == "sample" and args.exact and args.procedure == "mad":
        raise UsageError("mad 过程不支持 --exact")
    if args.command == "gadget" and args.action == "verify" and args.n is not None and args.n != len(args.s):
        raise UsageError(f"--n={args.n} 与 --s 的长度 {len(args.s)} 不一致")
    if args.command == "submit":
        if args.argv[:1] == ["--"]:
            args.argv = args.argv[1:]
        if not args.argv or args.argv[0] == "submit":
            raise UsageError("submit 后需要跟一个子命令")
    return args


def _load(path: Path) -> InstanceFile:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"无法读取实例文件 {path}: {e.strerror}") from e
    return parse_instance(text)


# ==================== 子命令分发 ====================
def _gadget(args: argparse.Namespace) -> dict:
    if args.action == "loggap":
        return reports.gadget_loggap_report(args.k, args.seed, args.requests)
    spec = KnapsackSpec(s=args.s, t=args.t)
    if args.action == "verify":
        return reports.gadget_verify_report(spec)
    report = reports.gadget_build_report(spec)
    if args.output is not None:
        args.output.write_text(reports.knapsack_instance_text(build_knapsack_graph(spec)), encoding="utf-8")
        report["output"] = str(args.output)
    return report


def _null(args: argparse.Namespace) -> dict:
    if args.action == "verify":
        return reports.null_verify_report(args.d, args.max_n)
    return reports.null_coeff_report(_load(args.instance).graph, args.exponents, args.ordering, args.colors)


def _sample(args: argparse.Namespace) -> dict:
    instance = _load(args.instance)
    if args.procedure == "mad":
        return reports.sample_mad_report(instance, args.d, args.seed, args.trials)
    if args.exact:
        return reports.sample_wdeg_exact_report(instance, args.d)
    return reports.sample_wdeg_monte_carlo_report(instance, args.d, args.seed, args.trials)


def _peel(args: argparse.Namespace) -> dict:
    instance = _load(args.instance)
    if instance.weights is None and args.seed is None:
        raise UsageError("实例没有加权请求时必须给出 --seed")
    return reports.peel_report(instance, args.seed, args.requests, args.eps)


def _submit(args: argparse.Namespace) -> dict:
    # 延迟导入：任务模块本身依赖本模块
    from app.tasks.verify_tasks import run_verification_task

    parse_arguments(args.argv)
    task_id = str(uuid.uuid4())
    run_verification_task.apply_async(args=[task_id, args.argv], task_id=task_id)
    logger.info(f"已提交后台任务 {task_id}: {' '.join(args.argv)}")
    return {"command": "submit", "ok": True, "task_id": task_id, "argv": args.argv}


DISPATCH: dict[str, Callable[[argparse.Namespace], dict]] = {
    "analyze": lambda args: reports.analyze_report(_load(args.instance).graph, args.d),
    "flex": lambda args: reports.flex_report(_load(args.instance), args.cap),
    "wflex": lambda args: reports.wflex_report(_load(args.instance), args.cap),
    "sample": _sample,
    "gadget": _gadget,
    "null": _null,
    "peel": _peel,
    "submit": _submit,
}


def command_name(args: argparse.Namespace) -> str:
    action = getattr(args, "action", None)
    return f"{args.command} {action}" if action else args.command


def build_report(argv: list[str]) -> dict:
    """
    解析参数并构建报告（不处理异常，供后台任务复用）。

    Raises:
        FlexError: 用法错误、解析错误或模块异常
    """
    args = parse_arguments(argv)
    try:
        return DISPATCH[args.command](args)
    except ValidationError as e:
        raise UsageError(f"参数不合法: {e.errors()[0]['msg']}") from e


# ==================== 入口 ====================
def emit(report: dict, as_json: bool) -> None:
    if as_json:
        sys.stdout.write(json.dumps(report, sort_keys=True, ensure_ascii=False, indent=2) + "\n")
    else:
        sys.stdout.write(reports.render_text(report) + "\n")


def run_subcommand(argv: list[str] | None = None) -> int:
    """
    执行一个子命令并输出报告。

    Returns:
        int: 退出码 0 / 1 / 2
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    as_json = "--json" in argv
    try:
        args = parse_arguments(argv)
    except UsageError as e:
        emit(reports.error_report("usage", e), as_json)
        return 2
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    logging.basicConfig(
        level=(args.log_level or settings.LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        stream=sys.stderr,
    )
    command = command_name(args)
    try:
        report = DISPATCH[args.command](args)
    except (ParseError, SemanticError, UsageError) as e:
        logger.error(f"{command}: {e.message}")
        emit(reports.error_report(command, e), args.json)
        return 2
    except ValidationError as e:
        error = UsageError(f"参数不合法: {e.errors()[0]['msg']}")
        logger.error(f"{command}: {error.message}")
        emit(reports.error_report(command, error), args.json)
        return 2
    except InternalError as e:
        logger.exception(f"{command}: 内部断言失败")
        emit(reports.error_report(command, e), args.json)
        return 1
    except FlexError as e:
        logger.error(f"{command}: {e.error_name}: {e.message}")
        emit(reports.error_report(command, e), args.json)
        return 1

    emit(report, args.json)
    return 0 if report["ok"] else 1


def main() -> None:
    sys.exit(run_subcommand())


if __name__ == "__main__":
    main()
