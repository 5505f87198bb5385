"""报告的序列化工具：有理数写成 "num/den" 字符串，输出只含 ASCII，字节稳定。"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from fractions import Fraction
from typing import Any, Dict, Iterable, Mapping, Sequence

import mpmath
import numpy as np

from ..utils.rationals import MP, QuadraticSurd

MPF_DIGITS = 20


def format_scalar(value: Any) -> Any:
    """
    功能说明:
        把单个标量转为 JSON 友好的值。整数保持为整数，有理数写成 "num/den"，
        二次无理数写成 "a+b*sqrt(D)"，高精度浮点写成 20 位有效数字的字符串。
    参数:
        value (Any): 待转换的值。
    返回:
        Any: int、float、str、bool 或 None。
    """
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, QuadraticSurd):
        return f"{format_scalar(value.a)}+{format_scalar(value.b)}*sqrt({value.d})"
    if isinstance(value, (MP.mpf, mpmath.mpf)):
        return MP.nstr(value, MPF_DIGITS)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return str(value)


def to_jsonable(value: Any) -> Any:
    """递归转换 dataclass、映射、序列、numpy 数组与标量。"""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return format_scalar(value)


def _cell(value: Any) -> str:
    value = format_scalar(value) if not isinstance(value, (list, tuple)) else to_jsonable(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return " ".join(_cell(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], meta: Mapping[str, Any]) -> str:
    """
    功能说明:
        输出 RFC 风格 CSV；每行末尾追加元数据列（如 seed、form_sha256）。
    参数:
        columns (Sequence[str]): 表头。
        rows (Iterable[Sequence[Any]]): 已按标准顺序排列的数据行。
        meta (Mapping[str, Any]): 附加到每一行的常量列。
    返回:
        str: 以 ``\\n`` 换行的 CSV 文本；无数据行时只有表头。
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(columns) + list(meta.keys()))
    tail = [_cell(v) for v in meta.values()]
    for row in rows:
        writer.writerow([_cell(v) for v in row] + tail)
    return buffer.getvalue()


def render_json(document: Mapping[str, Any]) -> str:
    """单行 JSON 文档（JSON lines 的一行），键顺序保持插入顺序。"""
    return json.dumps(to_jsonable(document), ensure_ascii=True, separators=(",", ":")) + "\n"


def render_report(report: Mapping[str, Any], output_format: str) -> bytes:
    """
    功能说明:
        按格式渲染服务层返回的报告。CSV 使用 ``columns``/``rows`` 表格并附 seed 与
        form_sha256 列；JSON 输出整份报告。
    参数:
        report (Mapping[str, Any]): 服务函数的返回值。
        output_format (str): ``csv`` 或 ``json``。
    返回:
        bytes: ASCII 编码的报告字节。
    """
    if output_format == "csv":
        meta: Dict[str, Any] = {"seed": report.get("seed"), "form_sha256": report.get("form_sha256")}
        text = render_csv(report.get("columns", []), report.get("rows", []), meta)
    else:
        text = render_json(report)
    return text.encode("ascii")
