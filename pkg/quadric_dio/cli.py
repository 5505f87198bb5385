"""命令行入口：解析参数、分发子命令、输出确定性的 CSV / JSON 报告。"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

from .config import FORMATS, AppConfig, RunConfig, parse_rational, parse_sgrid
from .errors import QuadricError
from .metrics.khintchine import PsiFamily
from .reporting.formatter import render_json, render_report
from .services import (
    ServiceContext,
    approx_report,
    count_report,
    create_service_context,
    exponents_report,
    khintchine_report,
    normalize_report,
    orbit_report,
    points_report,
    rank_report,
)
from .skills.quadric import resolve_form

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("rank", "normalize", "points", "count", "exponents", "approx", "orbit", "khintchine")
FORM_COMMANDS = {"rank", "normalize", "points", "count", "approx", "orbit"}


def build_parser() -> argparse.ArgumentParser:
    """构建带全部子命令的解析器；公共参数放在父解析器上。"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--form", dest="form_path", default=None, help="Form JSON file or builtin:<name>.")
    common.add_argument("--tmax", type=int, default=64, help="Height bound T for enumeration.")
    common.add_argument("--hmax", type=int, default=256, help="Height bound H_max for orbit enumeration.")
    common.add_argument("--sgrid", default="1:1024:*2", help='Flow grid "a:b:step"; "*k" steps geometrically.')
    common.add_argument("--psi-a", dest="psi_a", default="1", help="Power exponent a of psi.")
    common.add_argument("--psi-b", dest="psi_b", default="1", help="Log exponent b of psi.")
    common.add_argument("--seed", type=int, default=None, help="Random seed (recorded in every report).")
    common.add_argument("--format", dest="output_format", choices=FORMATS, default="csv")
    common.add_argument("--threads", type=int, default=1, help="Worker threads; QUADRIC_DIO_THREADS overrides.")

    parser = argparse.ArgumentParser(prog="quadric-dio", description="Diophantine approximation on rational quadrics.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        child = sub.add_parser(name, parents=[common])
        if name == "exponents":
            child.add_argument("--kmax", type=int, default=10)
            child.add_argument("--transfer", action="store_true", help="Append Veronese transfer rows.")
        if name in {"approx", "orbit"}:
            child.add_argument("--target", default=None, help="golden, liouville or chart:u1,u2,...")
        if name == "approx":
            child.add_argument(
                "--uniformity", type=int, default=0, help="Length of the target sequence toward an irrational isotropic point."
            )
        if name == "khintchine":
            child.add_argument("--big-n", dest="big_n", type=int, default=10, help="Covering level N.")
            child.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples (>= 1000).")
    return parser


def parse_run_config(argv: Optional[List[str]] = None, app: Optional[AppConfig] = None) -> RunConfig:
    """
    功能说明:
        把命令行参数转换为 RunConfig；未指定 --seed 时取 QUADRIC_DIO_SEED。
    参数:
        argv (Optional[List[str]]): 参数列表。
        app (Optional[AppConfig]): 环境配置。
    返回:
        RunConfig: 校验后的运行配置。
    """
    args = build_parser().parse_args(argv)
    app = app or AppConfig.from_env()
    return RunConfig(
        subcommand=args.subcommand,
        form_path=args.form_path,
        tmax=args.tmax,
        hmax=args.hmax,
        sgrid=parse_sgrid(args.sgrid),
        psi_a=parse_rational(args.psi_a),
        psi_b=parse_rational(args.psi_b),
        seed=app.sampling.seed if args.seed is None else args.seed,
        output_format=args.output_format,
        threads=args.threads,
        kmax=getattr(args, "kmax", 10),
        target=getattr(args, "target", None),
        big_n=getattr(args, "big_n", 10),
        samples=getattr(args, "samples", 100_000),
        transfer=getattr(args, "transfer", False),
        uniformity=getattr(args, "uniformity", 0),
    )


def _handlers() -> Dict[str, Callable[[ServiceContext, RunConfig, int], Dict[str, Any]]]:
    def form(config: RunConfig):
        return resolve_form(form_path=config.form_path)

    return {
        "rank": lambda ctx, c, t: rank_report(ctx, form(c), seed=c.seed, threads=t),
        "normalize": lambda ctx, c, t: normalize_report(ctx, form(c), seed=c.seed, threads=t),
        "points": lambda ctx, c, t: points_report(ctx, form(c), c.tmax, seed=c.seed, threads=t),
        "count": lambda ctx, c, t: count_report(ctx, form(c), c.tmax, seed=c.seed, threads=t),
        "exponents": lambda ctx, c, t: exponents_report(ctx, c.kmax, transfer=c.transfer, seed=c.seed),
        "approx": lambda ctx, c, t: approx_report(
            ctx, form(c), c.target, c.tmax, uniformity=c.uniformity, seed=c.seed, threads=t
        ),
        "orbit": lambda ctx, c, t: orbit_report(
            ctx, form(c), c.target, c.hmax, c.sgrid, psi=PsiFamily(c.psi_a, c.psi_b), seed=c.seed, threads=t
        ),
        "khintchine": lambda ctx, c, t: khintchine_report(
            ctx, PsiFamily(c.psi_a, c.psi_b), c.big_n, c.samples, seed=c.seed, threads=t
        ),
    }


def dispatch(config: RunConfig, context: Optional[ServiceContext] = None) -> Tuple[int, bytes]:
    """
    功能说明:
        执行子命令并渲染报告。领域异常转成单个 JSON 错误对象与对应退出码。
    参数:
        config (RunConfig): 运行配置。
        context (Optional[ServiceContext]): 服务上下文，缺省时从环境变量构建。
    返回:
        Tuple[int, bytes]: (退出码, 输出字节)。
    """
    context = context or create_service_context()
    threads = config.resolve_threads()
    handler = _handlers().get(config.subcommand)
    if handler is None:
        return 3, render_json({"error": "precondition", "message": f"unknown subcommand {config.subcommand!r}"}).encode("ascii")
    try:
        report = handler(context, config, threads)
    except QuadricError as exc:
        logger.error("%s failed: %s", config.subcommand, exc)
        return exc.exit_status, render_json(exc.to_payload()).encode("ascii")
    logger.debug("dispatch %s threads=%s format=%s", config.subcommand, threads, config.output_format)
    return 0, render_report(report, config.output_format)


def main(argv: Optional[List[str]] = None) -> int:
    """控制台脚本入口；日志写 stderr，报告写 stdout。"""
    logging.basicConfig(
        level=os.getenv("QUADRIC_DIO_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        app = AppConfig.from_env()
        config = parse_run_config(argv, app)
    except QuadricError as exc:
        sys.stdout.buffer.write(render_json(exc.to_payload()).encode("ascii"))
        return exc.exit_status
    status, payload = dispatch(config, create_service_context(app))
    sys.stdout.buffer.write(payload)
    sys.stdout.buffer.flush()
    return status


if __name__ == "__main__":
    sys.exit(main())
