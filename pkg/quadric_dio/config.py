"""quadric-dio 的配置模型，支持环境变量加载。"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from .errors import PreconditionError

THREADS_ENV = "QUADRIC_DIO_THREADS"
STRATEGIES = ("auto", "box", "divisor")
FORMATS = ("csv", "json")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise PreconditionError(f"{name} must be an integer, got {raw!r}") from exc


@dataclass
class EnumerationConfig:
    """
    点枚举的并行与策略设置。

    属性:
        threads (int): 工作线程数，结果与线程数无关。
        slice_rows (int): 每个并行任务处理的首坐标切片数。
        strategy (str): ``auto``、``box`` 或 ``divisor``。
    """

    threads: int = 1
    slice_rows: int = 64
    strategy: str = "auto"

    @classmethod
    def from_env(cls, prefix: str = "QUADRIC_DIO_") -> "EnumerationConfig":
        """
        功能说明:
            从环境变量读取枚举配置。
        参数:
            prefix (str): 变量名前缀。
        返回:
            EnumerationConfig: 填充完成的配置实例。
        """
        strategy = os.getenv(f"{prefix}STRATEGY", "auto").lower()
        if strategy not in STRATEGIES:
            raise PreconditionError(f"unknown enumeration strategy {strategy!r}")
        return cls(
            threads=max(_env_int(f"{prefix}THREADS", 1), 1),
            slice_rows=max(_env_int(f"{prefix}SLICE_ROWS", 64), 1),
            strategy=strategy,
        )


@dataclass
class WitnessConfig:
    """
    各向同性向量搜索的高度上限。

    属性:
        height_bound (int): 盒枚举的最大高度，按 1, 2, 4, ... 倍增直到该值。
    """

    height_bound: int = 16

    @classmethod
    def from_env(cls, prefix: str = "QUADRIC_DIO_") -> "WitnessConfig":
        return cls(height_bound=max(_env_int(f"{prefix}WITNESS_BOUND", 16), 1))


@dataclass
class SamplingConfig:
    """
    Monte Carlo 采样设置。

    属性:
        chunk_size (int): 每个独立子流的样本数；子流个数只取决于样本总数。
        seed (int): 默认随机种子。
    """

    chunk_size: int = 10_000
    seed: int = 0

    @classmethod
    def from_env(cls, prefix: str = "QUADRIC_DIO_") -> "SamplingConfig":
        return cls(
            chunk_size=max(_env_int(f"{prefix}MC_CHUNK", 10_000), 1),
            seed=_env_int(f"{prefix}SEED", 0),
        )


@dataclass
class AppConfig:
    """
    顶层组合配置，聚合枚举、见证搜索与采样设置。

    属性:
        enumeration (EnumerationConfig): 枚举参数。
        witness (WitnessConfig): 见证搜索参数。
        sampling (SamplingConfig): 采样参数。
        log_level (str): 日志级别。
    """

    enumeration: EnumerationConfig = field(default_factory=EnumerationConfig)
    witness: WitnessConfig = field(default_factory=WitnessConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "AppConfig":
        """
        功能说明:
            统一从环境变量载入所有子配置。
        返回:
            AppConfig: 完整的应用配置实例。
        """
        return cls(
            enumeration=EnumerationConfig.from_env(),
            witness=WitnessConfig.from_env(),
            sampling=SamplingConfig.from_env(),
            log_level=os.getenv("QUADRIC_DIO_LOG_LEVEL", "INFO").upper(),
        )


def parse_rational(raw: str) -> Fraction:
    """把 ``3/4``、``-2``、``0.5`` 之类的文本解析为精确有理数。"""
    try:
        return Fraction(raw.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"not a rational number: {raw!r}") from exc


def parse_sgrid(raw: str) -> List[Fraction]:
    """
    功能说明:
        解析 ``a:b:step`` 形式的 s 网格。step 以 ``*`` 开头时按倍数增长，
        例如 ``1:1024:*2`` 得到 1, 2, 4, ..., 1024；否则按加法步长增长。
    参数:
        raw (str): 命令行传入的网格描述。
    返回:
        List[Fraction]: 严格递增的有理数列表。
    """
    parts = raw.split(":")
    if len(parts) != 3:
        raise PreconditionError(f"s-grid must look like a:b:step, got {raw!r}")
    start, stop = parse_rational(parts[0]), parse_rational(parts[1])
    step_text = parts[2].strip()
    geometric = step_text.startswith("*")
    step = parse_rational(step_text[1:] if geometric else step_text)
    if start <= 0 or stop < start:
        raise PreconditionError("s-grid needs 0 < a <= b")
    if (geometric and step <= 1) or (not geometric and step <= 0):
        raise PreconditionError("s-grid step must make the grid increase")
    values: List[Fraction] = []
    current = start
    while current <= stop:
        values.append(current)
        current = current * step if geometric else current + step
    return values


@dataclass
class RunConfig:
    """
    一次 CLI 调用的完整参数。

    属性:
        subcommand (str): 子命令名称。
        form_path (Optional[str]): 二次型文件路径。
        tmax (int): 枚举高度上限 T。
        hmax (int): 轨道探测的枚举上限 H_max。
        sgrid (List[Fraction]): 流参数 s 的网格。
        psi_a (Fraction): ψ 的幂指数 a。
        psi_b (Fraction): ψ 的对数指数 b。
        seed (int): 随机种子，写入每一份报告。
        output_format (str): ``csv`` 或 ``json``。
        threads (int): 命令行给定的线程数（环境变量优先）。
    """

    subcommand: str
    form_path: Optional[str] = None
    tmax: int = 64
    hmax: int = 256
    sgrid: List[Fraction] = field(default_factory=lambda: [Fraction(2) ** j for j in range(11)])
    psi_a: Fraction = Fraction(1)
    psi_b: Fraction = Fraction(1)
    seed: int = 0
    output_format: str = "csv"
    threads: int = 1
    kmax: int = 10
    target: Optional[str] = None
    big_n: int = 10
    samples: int = 100_000
    transfer: bool = False
    uniformity: int = 0

    def __post_init__(self) -> None:
        # 1. 所有界必须为正，格式必须可识别。
        if self.tmax < 1 or self.hmax < 1 or self.kmax < 1 or self.big_n < 1 or self.uniformity < 0:
            raise PreconditionError("bounds must be positive")
        if self.threads < 1:
            raise PreconditionError("--threads must be at least 1")
        if self.output_format not in FORMATS:
            raise PreconditionError(f"unknown format {self.output_format!r}")

    def resolve_threads(self) -> int:
        """环境变量 ``QUADRIC_DIO_THREADS`` 存在时覆盖 ``--threads``。"""
        raw = os.getenv(THREADS_ENV)
        if raw is not None and raw.strip():
            return max(_env_int(THREADS_ENV, self.threads), 1)
        return self.threads
