"""保高度嵌入（Segre、Veronese）与 1-规范型的图卡提升 Φ(x) = (1, x, −R̃(x)/k)。"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import List, Sequence, Tuple

from ..errors import DimensionMismatchError, PreconditionError
from ..forms.normalize import hyperbolic_coefficient
from ..forms.qform import QuadForm, RationalForm
from ..utils.rationals import MP, QuadraticSurd, Scalar, as_scalar, is_exact, to_mpf
from .enumeration import ProjPoint


def segre(p: ProjPoint, q: ProjPoint) -> ProjPoint:
    """
    功能说明:
        Segre 嵌入 ℙ¹ × ℙ¹ → M_{Q_0}，[x0:x1],[y0:y1] ↦ [x0y0 : x0y1 : x1y0 : x1y1]。
        像点本原，高度等于两个输入高度之积。
    参数:
        p (ProjPoint): ℙ¹ 中的点。
        q (ProjPoint): ℙ¹ 中的点。
    返回:
        ProjPoint: x0·x3 − x1·x2 = 0 上的点。
    """
    if len(p) != 2 or len(q) != 2:
        raise DimensionMismatchError("segre takes two points of P^1")
    (x0, x1), (y0, y1) = p.coords, q.coords
    return ProjPoint.from_vector((x0 * y0, x0 * y1, x1 * y0, x1 * y1))


def veronese(p: ProjPoint, n: int) -> ProjPoint:
    """n 次 Veronese 嵌入：按多重指标顺序列出全部 n 次单项式，高度变为 H(p)^n。"""
    if n < 1:
        raise PreconditionError("veronese degree must be at least 1")
    coords = p.coords
    monomials = [math.prod(coords[i] for i in combo) for combo in itertools.combinations_with_replacement(range(len(coords)), n)]
    return ProjPoint.from_vector(monomials)


def veronese_dim(k: int, n: int) -> int:
    """Φ_{k,n} 的目标射影维数 [k,n] − 1。"""
    return math.comb(k + n, n) - 1


def _rational_form(form: QuadForm | RationalForm) -> RationalForm:
    return form.as_rational() if isinstance(form, QuadForm) else form


def remainder_block(form: QuadForm | RationalForm) -> Tuple[RationalForm, Fraction]:
    """返回 1-规范型的中间块 R̃ 与系数 k。"""
    rational = _rational_form(form)
    k = hyperbolic_coefficient(rational)
    return rational.block(list(range(1, rational.dim - 1))), k


def chart_point(form: QuadForm | RationalForm, x: Sequence[object]) -> ProjPoint:
    """
    功能说明:
        有理图卡提升 Φ(x) = (1, x, −R̃(x)/k)，结果化为本原射影点。
    参数:
        form (QuadForm | RationalForm): 1-规范型 k·x_0x_d + R̃。
        x (Sequence): 长度 d−1 的有理向量。
    返回:
        ProjPoint: M_{Q1} 上的点。
    """
    block, k = remainder_block(form)
    values = [Fraction(v) for v in x]
    if len(values) != block.dim:
        raise DimensionMismatchError(f"chart coordinates must have length {block.dim}")
    tail = -Fraction(block.evaluate(values)) / k
    return ProjPoint.from_vector([Fraction(1)] + values + [tail])


def _float_matrix(matrix: Sequence[Sequence[Fraction]]) -> List[List[object]]:
    return [[to_mpf(c) for c in row] for row in matrix]


def chart_lift(form: QuadForm | RationalForm, x: Sequence[object]) -> Tuple[Scalar, ...]:
    """
    图卡提升的一般标量版本：x 可以是有理数、同一二次域中的 a+b√D，或 mpmath 浮点。
    精确输入得到精确坐标，否则全部转成 113 位浮点。
    """
    block, k = remainder_block(form)
    values = [as_scalar(v) for v in x]
    if len(values) != block.dim:
        raise DimensionMismatchError(f"chart coordinates must have length {block.dim}")
    if all(is_exact(v) for v in values):
        total: object = Fraction(0)
        for i, row in enumerate(block.matrix):
            for j, c in enumerate(row):
                if c:
                    total = total + values[i] * values[j] * c
        tail = -total / k if isinstance(total, QuadraticSurd) else -Fraction(total) / k
        return (Fraction(1), *values, tail)
    floats = [to_mpf(v) for v in values]
    matrix = _float_matrix(block.matrix)
    total_f = MP.fsum(floats[i] * matrix[i][j] * floats[j] for i in range(len(floats)) for j in range(len(floats)))
    return (MP.mpf(1), *floats, -total_f / to_mpf(k))
