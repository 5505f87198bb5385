"""整系数二次型：代数运算、局部-整体迷向判定与规范化。"""

from .loader import builtin_form, form_from_record, form_hash, form_to_record, load_form
from .qform import QuadForm, RationalForm

__all__ = [
    "QuadForm",
    "RationalForm",
    "builtin_form",
    "form_from_record",
    "form_hash",
    "form_to_record",
    "load_form",
]
