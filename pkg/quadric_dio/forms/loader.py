"""二次型文件的读写与常用示例型。

文件格式为 ``{"dim": d+1, "upper": [[i, j, c], ...]}``，c·x_i·x_j 按多项式系数给出。
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping

from ..errors import FormFileError, PreconditionError
from .qform import QuadForm

logger = logging.getLogger(__name__)

BUILTIN_FORMS: Dict[str, Dict[str, Any]] = {
    "conic": {"dim": 3, "upper": [[0, 2, 1], [1, 1, -1]]},
    "q0": {"dim": 4, "upper": [[0, 3, 1], [1, 2, -1]]},
    "sphere": {"dim": 4, "upper": [[0, 0, -1], [1, 1, 1], [2, 2, 1], [3, 3, 1]]},
    "sphere_normalized": {"dim": 4, "upper": [[0, 3, 1], [1, 1, -1], [2, 2, -1]]},
    "q5": {"dim": 5, "upper": [[0, 4, 1], [1, 1, 1], [2, 2, 1], [3, 3, -3]]},
    "anisotropic3": {"dim": 3, "upper": [[0, 0, 1], [1, 1, 1], [2, 2, -3]]},
}


def form_from_record(record: Mapping[str, Any]) -> QuadForm:
    """
    功能说明:
        把 ``{dim, upper}`` 记录解析为整系数二次型。
    参数:
        record (Mapping[str, Any]): 已解码的 JSON 对象。
    返回:
        QuadForm: 对应的二次型。
    异常:
        FormFileError: 字段缺失、类型错误或下标越界。
    """
    if not isinstance(record, Mapping) or "dim" not in record or "upper" not in record:
        raise FormFileError("form record needs 'dim' and 'upper'")
    dim = record["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise FormFileError(f"'dim' must be a positive integer, got {dim!r}")
    terms = []
    for entry in record["upper"]:
        if (
            not isinstance(entry, (list, tuple))
            or len(entry) != 3
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in entry)
        ):
            raise FormFileError(f"each 'upper' entry must be three integers, got {entry!r}")
        i, j, c = entry
        if not 0 <= i <= j < dim:
            raise FormFileError(f"monomial index ({i}, {j}) out of range for dim {dim}")
        terms.append((i, j, c))
    try:
        return QuadForm.from_polynomial(dim, terms)
    except PreconditionError as exc:
        raise FormFileError(str(exc)) from exc


def load_form(path: str | Path) -> QuadForm:
    """从 JSON 文件读取二次型；``builtin:<name>`` 引用内置示例。"""
    text = str(path)
    if text.startswith("builtin:"):
        name = text.split(":", 1)[1]
        if name not in BUILTIN_FORMS:
            raise FormFileError(f"unknown builtin form {name!r}")
        return form_from_record(BUILTIN_FORMS[name])
    try:
        record = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise FormFileError(f"form file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise FormFileError(f"cannot read form file {path}: {exc}") from exc
    logger.debug("loaded form from %s", path)
    return form_from_record(record)


def form_to_record(q: QuadForm) -> Dict[str, Any]:
    return {"dim": q.dim, "upper": [list(term) for term in q.upper()]}


def builtin_form(name: str) -> QuadForm:
    return load_form(f"builtin:{name}")


def form_hash(q: QuadForm) -> str:
    """gram2 规范 JSON 的 sha256，用于报告溯源。"""
    canonical = json.dumps([list(row) for row in q.gram2], separators=(",", ":"))
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()
