# quadric_dio/test.py
"""端到端集成脚本：经 stdio 驱动 MCP 服务器，并检查 CLI 输出与线程数无关。

运行方式：python -m quadric_dio.test
"""

import asyncio
import json
import os
import subprocess
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

try:
    from mcp import ClientSession, StdioServerParameters
    from mcp.client.stdio import stdio_client
except ImportError as exc:
    raise RuntimeError("未找到 mcp 客户端依赖，请执行 pip install -r requirements.txt") from exc

from quadric_dio.forms.loader import BUILTIN_FORMS

FORMS_DIR = ROOT / "configs" / "forms"

CLI_SUITE: List[List[str]] = [
    ["rank", "--form", str(FORMS_DIR / "q5.json"), "--format", "json"],
    ["normalize", "--form", str(FORMS_DIR / "sphere.json"), "--format", "json"],
    ["points", "--form", str(FORMS_DIR / "q0.json"), "--tmax", "16"],
    ["count", "--form", str(FORMS_DIR / "sphere.json"), "--tmax", "64"],
    ["count", "--form", str(FORMS_DIR / "conic.json"), "--tmax", "512"],
    ["exponents", "--kmax", "10", "--transfer"],
    ["approx", "--form", str(FORMS_DIR / "conic.json"), "--target", "golden", "--tmax", "256", "--format", "json"],
    ["orbit", "--form", str(FORMS_DIR / "conic.json"), "--hmax", "32", "--sgrid", "1:64:*2", "--format", "json"],
    ["khintchine", "--psi-a", "1", "--psi-b", "1", "--big-n", "8", "--samples", "20000", "--seed", "7", "--format", "json"],
]


def _assert_keys(payload: Dict[str, Any], expected: Iterable[str]) -> None:
    missing = [key for key in expected if key not in payload]
    if missing:
        raise AssertionError(f"缺失字段: {missing}, payload={payload}")


def _server_parameters() -> StdioServerParameters:
    return StdioServerParameters(
        command=sys.executable,
        args=["-m", "quadric_dio.mcp_server", "stdio"],
        env={**os.environ, "PYTHONPATH": str(ROOT), "MCP_SERVER_LOG_LEVEL": "WARNING"},
    )


def _tool_payload(result: Any) -> Dict[str, Any]:
    structured = getattr(result, "structuredContent", None)
    if structured:
        return structured.get("result", structured)
    return json.loads(result.content[0].text)


async def _check_stdio_once() -> Tuple[int, Dict[str, Any], Dict[str, Any]]:
    async with stdio_client(_server_parameters()) as (read, write):
        async with ClientSession(read, write) as session:
            await session.initialize()
            tools = await session.list_tools()
            if not tools.tools:
                raise AssertionError("MCP stdio 接口返回的工具列表为空")
            config_payload = await session.read_resource("quadric-dio://config")
            if not config_payload.contents:
                raise AssertionError("配置资源内容为空")
            rank = _tool_payload(await session.call_tool("rank", {"form": BUILTIN_FORMS["q0"]}))
            broken = _tool_payload(
                await session.call_tool("rank", {"form": {"dim": 3, "upper": [[0, 0, 1], [1, 1, 0], [2, 2, 0]]}})
            )
            return len(tools.tools), rank, broken


def _verify_stdio_server() -> None:
    tool_count, rank, broken = asyncio.run(_check_stdio_once())
    if tool_count != 8:
        raise AssertionError(f"期望 8 个工具，实际 {tool_count}")
    _assert_keys(rank, ("p_Q", "p_R", "witness", "form_sha256", "seed"))
    if (rank["p_Q"], rank["p_R"]) != (2, 2):
        raise AssertionError(f"Q_0 的秩应为 (2, 2)，实际 {rank}")
    if broken.get("error") != "singular_form":
        raise AssertionError(f"奇异型应返回 singular_form 错误，实际 {broken}")
    print(f"[stdio] 工具={tool_count}, rank(Q_0)=({rank['p_Q']}, {rank['p_R']})")


def _run_cli(args: List[str], threads: int) -> Tuple[int, bytes]:
    env = {**os.environ, "PYTHONPATH": str(ROOT), "QUADRIC_DIO_LOG_LEVEL": "WARNING"}
    env.pop("QUADRIC_DIO_THREADS", None)
    completed = subprocess.run(
        [sys.executable, "-m", "quadric_dio.cli", *args, "--threads", str(threads)],
        env=env,
        capture_output=True,
        check=False,
    )
    return completed.returncode, completed.stdout


def _verify_cli_determinism() -> None:
    for args in CLI_SUITE:
        outputs = {threads: _run_cli(args, threads) for threads in (1, 4, 8)}
        statuses = {status for status, _ in outputs.values()}
        if statuses != {0}:
            raise AssertionError(f"{args[0]} 退出码异常: {statuses}")
        payloads = {payload for _, payload in outputs.values()}
        if len(payloads) != 1:
            raise AssertionError(f"{' '.join(args)} 的输出随线程数变化")
        payload = payloads.pop()
        payload.decode("ascii")
        print(f"[cli] {args[0]:<10} bytes={len(payload)} 线程 1/4/8 输出一致")

    status, payload = _run_cli(["rank", "--form", str(FORMS_DIR / "missing.json")], 1)
    if status != 2 or json.loads(payload)["error"] != "malformed_form":
        raise AssertionError(f"缺失的型文件应返回退出码 2，实际 {status}: {payload!r}")
    print("[cli] 缺失型文件 -> 退出码 2")


def main() -> None:
    _verify_stdio_server()
    _verify_cli_determinism()
    print("[done] 集成检查全部通过")


if __name__ == "__main__":
    main()
