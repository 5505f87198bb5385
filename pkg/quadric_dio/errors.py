"""统一的异常层级，CLI 依据 ``exit_status`` 决定进程退出码。"""

from __future__ import annotations

from typing import Any, Dict


class QuadricError(ValueError):
    """
    所有领域异常的基类。

    属性:
        code (str): 机器可读的错误代码，写入 CLI 的错误对象。
        exit_status (int): CLI 捕获后使用的退出码。
    """

    code = "quadric_error"
    exit_status = 3

    def to_payload(self) -> Dict[str, Any]:
        """返回可直接序列化为 JSON 的错误对象。"""
        return {"error": self.code, "message": str(self)}


class FormFileError(QuadricError):
    """二次型文件无法解析，或系数不能给出整数 gram2。"""

    code = "malformed_form"
    exit_status = 2


class PreconditionError(QuadricError):
    """调用参数违反前置条件（T < 1、s <= 0、ψ 假设不满足等）。"""

    code = "precondition"


class DimensionMismatchError(PreconditionError):
    code = "dimension_mismatch"


class SingularFormError(PreconditionError):
    code = "singular_form"


class NotApplicableError(PreconditionError):
    code = "not_applicable"


class NotIsotropicError(PreconditionError):
    code = "not_isotropic"


class NotNormalizedError(PreconditionError):
    code = "not_normalized"


class CorrespondenceViolation(QuadricError):
    """精确校验中出现不等式反例，说明实现本身有缺陷。"""

    code = "correspondence_violation"
