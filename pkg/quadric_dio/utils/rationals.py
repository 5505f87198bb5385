"""精确标量与有理矩阵的公共工具。

标量统一为三种形态：``Fraction``（有理数）、:class:`QuadraticSurd`
（a + b·√D，在二次域中精确比较大小）以及 113 位精度的 mpmath 浮点数。
矩阵一律是 ``Fraction`` 组成的元组的元组；需要消元、零空间、行列式时
转交给 sympy 处理。
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import mpmath
import sympy

MP = mpmath.MPContext()
MP.prec = 113

Matrix = Tuple[Tuple[Fraction, ...], ...]
Vector = Tuple[Fraction, ...]
IntVector = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class QuadraticSurd:
    """
    二次无理数 a + b·√d，d 为大于 1 的无平方因子整数。

    属性:
        a (Fraction): 有理部分。
        b (Fraction): √d 的系数。
        d (int): 根号下的无平方因子整数。
    """

    a: Fraction
    b: Fraction
    d: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.d < 2 or max(sympy.factorint(self.d).values()) > 1:
            raise ValueError(f"radicand must be squarefree and > 1, got {self.d}")

    def _coerce(self, other: object) -> Optional["QuadraticSurd"]:
        if isinstance(other, QuadraticSurd):
            if other.d != self.d:
                raise ValueError("cannot mix different quadratic fields")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadraticSurd(Fraction(other), Fraction(0), self.d)
        return None

    def sign(self) -> int:
        """精确符号：-1、0 或 1。"""
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0 or sa == sb:
            return sa or sb
        if sa == 0:
            return sb
        return sa if self.a * self.a > self.b * self.b * self.d else sb

    def conjugate(self) -> "QuadraticSurd":
        return QuadraticSurd(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def __add__(self, other: object) -> "QuadraticSurd":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return QuadraticSurd(self.a + rhs.a, self.b + rhs.b, self.d)

    __radd__ = __add__

    def __neg__(self) -> "QuadraticSurd":
        return QuadraticSurd(-self.a, -self.b, self.d)

    def __sub__(self, other: object) -> "QuadraticSurd":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return QuadraticSurd(self.a - rhs.a, self.b - rhs.b, self.d)

    def __rsub__(self, other: object) -> "QuadraticSurd":
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return lhs - self

    def __mul__(self, other: object) -> "QuadraticSurd":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return QuadraticSurd(
            self.a * rhs.a + self.b * rhs.b * self.d,
            self.a * rhs.b + self.b * rhs.a,
            self.d,
        )

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> "QuadraticSurd":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        n = rhs.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero surd")
        num = self * rhs.conjugate()
        return QuadraticSurd(num.a / n, num.b / n, self.d)

    def __rtruediv__(self, other: object) -> "QuadraticSurd":
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return lhs / self

    def __abs__(self) -> "QuadraticSurd":
        return -self if self.sign() < 0 else self

    def _cmp(self, other: object) -> Optional[int]:
        rhs = self._coerce(other)
        if rhs is None:
            return None
        return (self - rhs).sign()

    def __eq__(self, other: object) -> bool:
        result = self._cmp(other)
        return NotImplemented if result is None else result == 0  # type: ignore[return-value]

    def __lt__(self, other: object) -> bool:
        result = self._cmp(other)
        return NotImplemented if result is None else result < 0  # type: ignore[return-value]

    def __le__(self, other: object) -> bool:
        result = self._cmp(other)
        return NotImplemented if result is None else result <= 0  # type: ignore[return-value]

    def __gt__(self, other: object) -> bool:
        result = self._cmp(other)
        return NotImplemented if result is None else result > 0  # type: ignore[return-value]

    def __ge__(self, other: object) -> bool:
        result = self._cmp(other)
        return NotImplemented if result is None else result >= 0  # type: ignore[return-value]

    def __hash__(self) -> int:
        return hash((self.a, self.b, self.d))

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    def __float__(self) -> float:
        return float(to_mpf(self))

    def __str__(self) -> str:
        return f"{self.a}+{self.b}*sqrt({self.d})"


Scalar = Union[Fraction, QuadraticSurd, mpmath.mpf]


def as_scalar(value: object) -> Scalar:
    """把整数、字符串或浮点输入规整为本包支持的标量类型。"""
    if isinstance(value, (Fraction, QuadraticSurd)):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return MP.mpf(value)


def is_exact(value: object) -> bool:
    return isinstance(value, (int, Fraction, QuadraticSurd))


def to_mpf(value: object) -> mpmath.mpf:
    """转成 113 位 mpmath 浮点数。"""
    if isinstance(value, QuadraticSurd):
        return to_mpf(value.a) + to_mpf(value.b) * MP.sqrt(value.d)
    if isinstance(value, Fraction):
        return MP.mpf(value.numerator) / value.denominator
    return MP.mpf(value)


def golden_ratio() -> QuadraticSurd:
    return QuadraticSurd(Fraction(1, 2), Fraction(1, 2), 5)


def primitive_vector(values: Iterable[object]) -> IntVector:
    """
    功能说明:
        将有理向量缩放为互素整数向量，并把首个非零坐标规范为正。
    参数:
        values (Iterable[object]): 整数或有理数坐标。
    返回:
        IntVector: 原始且符号规范化的整数向量。
    """
    fracs = [Fraction(v) for v in values]
    if not any(fracs):
        raise ValueError("zero vector has no projective class")
    scale = reduce(lcm, (f.denominator for f in fracs), 1)
    ints = [int(f * scale) for f in fracs]
    common = reduce(gcd, (abs(v) for v in ints), 0)
    ints = [v // common for v in ints]
    lead = next(v for v in ints if v != 0)
    if lead < 0:
        ints = [-v for v in ints]
    return tuple(ints)


def frac_matrix(rows: Iterable[Iterable[object]]) -> Matrix:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else ()


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt) for row in a)


def mat_vec(a: Matrix, v: Sequence[object]) -> Vector:
    return tuple(sum((x * Fraction(y) for x, y in zip(row, v)), Fraction(0)) for row in a)


def to_sympy(a: Sequence[Sequence[object]]) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(Fraction(x).numerator, Fraction(x).denominator) for x in row] for row in a])


def from_sympy(m: sympy.Matrix) -> Matrix:
    return tuple(
        tuple(Fraction(int(sympy.fraction(m[i, j])[0]), int(sympy.fraction(m[i, j])[1])) for j in range(m.cols))
        for i in range(m.rows)
    )


def mat_inverse(a: Matrix) -> Matrix:
    return from_sympy(to_sympy(a).inv())


def mat_det(a: Sequence[Sequence[object]]) -> Fraction:
    if not a:
        return Fraction(1)
    value = to_sympy(a).det(method="bareiss")
    num, den = sympy.fraction(value)
    return Fraction(int(num), int(den))


def matrix_rank(rows: Sequence[Sequence[object]]) -> int:
    if not rows:
        return 0
    return int(to_sympy(rows).rank())


def nullspace(a: Matrix, ncols: int) -> List[Vector]:
    """返回 ``a x = 0`` 的零空间基（sympy 的 rref 主元顺序，结果确定）。"""
    if not a:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    basis = to_sympy(a).nullspace()
    return [tuple(row[0] for row in from_sympy(vec)) for vec in basis]


def rref_solve(a: Matrix, rhs: Sequence[Fraction]) -> Vector:
    """
    功能说明:
        用简化行阶梯形求解 ``a x = rhs``，自由变量取 0，得到确定的一个解。
    参数:
        a (Matrix): 系数矩阵。
        rhs (Sequence[Fraction]): 右端向量。
    返回:
        Vector: 一个特解。
    """
    ncols = len(a[0])
    augmented = to_sympy([list(row) + [value] for row, value in zip(a, rhs)])
    reduced, pivots = augmented.rref()
    if ncols in pivots:
        raise ValueError("linear system is inconsistent")
    solution = [Fraction(0)] * ncols
    reduced_rows = from_sympy(reduced)
    for row_index, col in enumerate(pivots):
        solution[col] = reduced_rows[row_index][ncols]
    return tuple(solution)


def unify(*values: object) -> Tuple[Scalar, ...]:
    """全部精确时原样返回，否则全部转成 113 位浮点，便于混合比较与运算。"""
    scalars = [as_scalar(v) for v in values]
    if all(is_exact(v) for v in scalars):
        return tuple(scalars)
    return tuple(to_mpf(v) for v in scalars)
