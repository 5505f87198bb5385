"""quadric-dio MCP 服务模块，基于 FastMCP 把各子命令暴露为工具。"""

import argparse
import logging
import os
from collections.abc import AsyncIterator
from contextlib import asynccontextmanager
from typing import Any, Dict, List, Optional, Union, cast

from typing_extensions import TypedDict

from mcp.server.fastmcp import Context, FastMCP

from quadric_dio.config import AppConfig
from quadric_dio.errors import QuadricError
from quadric_dio.forms.loader import BUILTIN_FORMS, builtin_form
from quadric_dio.services import ServiceContext, create_service_context, form_summary
from quadric_dio.skills import Skill, build_quadric_skills

logger = logging.getLogger(__name__)

GLOBAL_SERVICE_CONTEXT: Optional[ServiceContext] = None
GLOBAL_SKILL_INDEX: Optional[Dict[str, Skill]] = None


class FormRecordPayload(TypedDict):
    dim: int
    upper: List[List[int]]


class ReportPayload(TypedDict, total=False):
    command: str
    seed: int
    form_sha256: Optional[str]
    form: Optional[FormRecordPayload]
    columns: List[str]
    rows: List[List[Any]]
    error: str
    message: str


class ConfigPayload(TypedDict):
    threads: int
    slice_rows: int
    strategy: str
    witness_bound: int
    mc_chunk: int
    seed: int
    builtin_forms: List[str]


class QuadricAppContext:
    """封装 MCP 生命周期中共享的服务上下文与技能索引。

    Attributes:
        service_context (ServiceContext): 服务层上下文。
        skill_index (dict[str, Skill]): 按名称索引的技能字典。
    """

    def __init__(self, service_context: ServiceContext, skill_index: Dict[str, Skill]) -> None:
        self.service_context = service_context
        self.skill_index = skill_index


@asynccontextmanager
async def app_lifespan(server: FastMCP) -> AsyncIterator[QuadricAppContext]:
    """FastMCP 生命周期钩子：从环境变量加载配置并构建技能索引。"""

    service_context = create_service_context(AppConfig.from_env())
    skill_index: Dict[str, Skill] = {skill.name: skill for skill in build_quadric_skills(service_context)}

    global GLOBAL_SERVICE_CONTEXT, GLOBAL_SKILL_INDEX
    GLOBAL_SERVICE_CONTEXT = service_context
    GLOBAL_SKILL_INDEX = skill_index
    logger.info("quadric-dio skills registered: %s", ", ".join(sorted(skill_index)))

    yield QuadricAppContext(service_context=service_context, skill_index=skill_index)


mcp = FastMCP(
    name="quadric-dio",
    instructions=(
        "Exact computations on rational quadratic hypersurfaces: rank, normalization, "
        "rational points, approximation profiles, flow orbits and Khintchine-type experiments. "
        "Forms are passed inline as {dim, upper} with upper a list of [i, j, c] coefficients."
    ),
    lifespan=app_lifespan,
    streamable_http_path="/mcp",
    json_response=True,
    stateless_http=True,
)

mcp.dependencies = ["sympy", "numpy", "mpmath"]


def _service(ctx: Context) -> ServiceContext:
    """从请求上下文里提取服务上下文，生命周期未就绪时回退到全局实例。"""

    try:
        return ctx.request_context.lifespan_context.service_context  # type: ignore[union-attr]
    except (AttributeError, ValueError):
        pass
    if GLOBAL_SERVICE_CONTEXT is not None:
        return GLOBAL_SERVICE_CONTEXT
    raise RuntimeError("Service context is not available; lifespan may not be initialized.")


def _skills(ctx: Context) -> Dict[str, Skill]:
    """从请求上下文里提取技能索引。"""

    try:
        return ctx.request_context.lifespan_context.skill_index  # type: ignore[union-attr]
    except (AttributeError, ValueError):
        pass
    if GLOBAL_SKILL_INDEX is not None:
        return GLOBAL_SKILL_INDEX
    raise RuntimeError("Skill index is not available; lifespan may not be initialized.")


def _run(ctx: Context, name: str, **kwargs: Any) -> ReportPayload:
    """调用技能；领域异常转成与 CLI 相同的错误对象。"""

    try:
        result = _skills(ctx)[name].invoke(**kwargs)
    except QuadricError as exc:
        logger.warning("tool %s failed: %s", name, exc)
        return cast(ReportPayload, exc.to_payload())
    return cast(ReportPayload, result)


@mcp.resource("quadric-dio://config", mime_type="application/json")
def read_configuration(ctx: Context) -> ConfigPayload:
    """返回当前生效的配置与内置示例型名称。"""

    config = _service(ctx).config
    return {
        "threads": config.enumeration.threads,
        "slice_rows": config.enumeration.slice_rows,
        "strategy": config.enumeration.strategy,
        "witness_bound": config.witness.height_bound,
        "mc_chunk": config.sampling.chunk_size,
        "seed": config.sampling.seed,
        "builtin_forms": sorted(BUILTIN_FORMS),
    }


@mcp.resource("quadric-dio://forms/{name}", mime_type="application/json")
def read_builtin_form(name: str) -> Dict[str, Any]:
    """读取内置示例型的基本不变量。

    Args:
        name (str): 内置型名称，例如 ``q0``、``conic``。

    Returns:
        Dict[str, Any]: 不变量摘要；名称未知时返回错误对象。
    """

    try:
        return form_summary(builtin_form(name))
    except QuadricError as exc:
        return exc.to_payload()


@mcp.tool(name="rank")
def tool_rank(ctx: Context, form: FormRecordPayload, threads: int = 1) -> ReportPayload:
    """判定迷向性并计算 (p_Q, p_R)。

    Args:
        ctx (Context): FastMCP 请求上下文。
        form (FormRecordPayload): 内联二次型记录。
        threads (int): 枚举线程数。
    """

    return _run(ctx, "rank", form=form, threads=threads)


@mcp.tool(name="normalize")
def tool_normalize(ctx: Context, form: FormRecordPayload, threads: int = 1) -> ReportPayload:
    """沿极大全迷向子空间规范化，返回精确的 M 与 R。"""

    return _run(ctx, "normalize", form=form, threads=threads)


@mcp.tool(name="points")
def tool_points(ctx: Context, form: FormRecordPayload, tmax: int = 64, threads: int = 1) -> ReportPayload:
    """列出高度不超过 tmax 的有理点。"""

    return _run(ctx, "points", form=form, tmax=tmax, threads=threads)


@mcp.tool(name="count")
def tool_count(ctx: Context, form: FormRecordPayload, tmax: int = 64, threads: int = 1) -> ReportPayload:
    """在 2 的幂网格上统计 N(T)。"""

    return _run(ctx, "count", form=form, tmax=tmax, threads=threads)


@mcp.tool(name="exponents")
def tool_exponents(ctx: Context, kmax: int = 10, transfer: bool = False) -> ReportPayload:
    """输出指数表，可附 Veronese 传递行。"""

    return _run(ctx, "exponents", kmax=kmax, transfer=transfer)


@mcp.tool(name="approx")
def tool_approx(
    ctx: Context,
    form: FormRecordPayload,
    target: Optional[str] = None,
    tmax: int = 64,
    uniformity: int = 0,
    threads: int = 1,
) -> ReportPayload:
    """目标点的逼近谱与 Dirichlet 剖面。

    Args:
        ctx (Context): FastMCP 请求上下文。
        form (FormRecordPayload): 1-规范型记录。
        target (Optional[str]): golden、liouville 或 chart:u1,...。
        tmax (int): 枚举高度上界。
        uniformity (int): 逼近无理实迷向点的目标序列长度，0 表示不计算。
        threads (int): 枚举线程数。
    """

    return _run(ctx, "approx", form=form, target=target, tmax=tmax, uniformity=uniformity, threads=threads)


@mcp.tool(name="orbit")
def tool_orbit(
    ctx: Context,
    form: FormRecordPayload,
    target: Optional[str] = None,
    hmax: int = 256,
    sgrid: Optional[str] = None,
    psi_a: Optional[str] = None,
    psi_b: Optional[str] = None,
    threads: int = 1,
) -> ReportPayload:
    """目标点对应格的 ρ(s) 剖面与三方判定。"""

    return _run(
        ctx, "orbit", form=form, target=target, hmax=hmax, sgrid=sgrid, psi_a=psi_a, psi_b=psi_b, threads=threads
    )


@mcp.tool(name="khintchine")
def tool_khintchine(
    ctx: Context,
    psi_a: Union[str, int] = "1",
    psi_b: Union[str, int] = "1",
    big_n: int = 10,
    samples: int = 100_000,
    seed: int = 0,
    threads: int = 1,
) -> ReportPayload:
    """级数判定、覆盖界与 Monte Carlo 测度估计。"""

    return _run(
        ctx, "khintchine", psi_a=psi_a, psi_b=psi_b, big_n=big_n, samples=samples, seed=seed, threads=threads
    )


def main(argv: Optional[list[str]] = None) -> None:
    """命令行入口，支持选择传输方式与监听参数。

    Args:
        argv (Optional[list[str]]): 手动传入的参数列表，通常由命令行自动提供。
    """

    logging.basicConfig(
        level=os.getenv("MCP_SERVER_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    parser = argparse.ArgumentParser(description="Run the quadric-dio MCP server.")
    parser.add_argument(
        "transport",
        nargs="?",
        default="stdio",
        choices=["stdio", "sse", "streamable-http"],
        help="Transport mechanism to expose (default: stdio).",
    )
    parser.add_argument("--host", default=None, help="Optional host binding for HTTP-based transports.")
    parser.add_argument("--port", type=int, default=None, help="Optional port binding for HTTP-based transports.")
    args = parser.parse_args(argv)

    if args.host:
        mcp.settings.host = args.host
    if args.port is not None:
        mcp.settings.port = args.port
    logger.info("Starting MCP server transport=%s host=%s port=%s", args.transport, mcp.settings.host, mcp.settings.port)

    mcp.run(transport=args.transport)


if __name__ == "__main__":
    main()
