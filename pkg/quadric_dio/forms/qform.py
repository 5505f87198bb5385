"""整系数二次型的精确代数：求值、双线性型、非奇异性、符号差、行列式。

二次型以 ``gram2 = 2·B_Q`` 存储，gram2 为整数对称矩阵且对角线为偶数，
因而 Q(x) = xᵀ·gram2·x / 2 对整数向量总是整数。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from math import gcd, isqrt, lcm
from typing import Iterable, List, Sequence, Tuple

from ..errors import DimensionMismatchError, NotApplicableError, PreconditionError
from ..utils.rationals import Matrix, frac_matrix, mat_det, mat_mul, transpose

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Signature:
    """实符号差 (pos, neg, zero)。"""

    pos: int
    neg: int
    zero: int

    @property
    def p_r(self) -> int:
        """ℝ-秩 min(pos, neg)；仅在 zero == 0 时等于极大全迷向子空间维数。"""
        return min(self.pos, self.neg)

    @property
    def indefinite(self) -> bool:
        return self.pos > 0 and self.neg > 0


@dataclass(frozen=True)
class RankPair:
    p_q: int
    p_r: int

    def check(self, dim: int) -> None:
        """校验 p_Q ≤ p_R ≤ (d+1)/2 且 p_Q ≥ p_R − 2。"""
        if not (self.p_q <= self.p_r <= dim // 2 and self.p_q >= self.p_r - 2):
            raise AssertionError(f"rank invariants violated: {self} for dim {dim}")


@dataclass(frozen=True)
class QuadForm:
    """
    ℤ^{d+1} 上的整系数二次型。

    属性:
        gram2 (Tuple[Tuple[int, ...], ...]): 2·B_Q，对称、对角线为偶数。
    """

    gram2: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(x) for x in row) for row in self.gram2)
        object.__setattr__(self, "gram2", rows)
        n = len(rows)
        if n == 0 or any(len(row) != n for row in rows):
            raise PreconditionError("gram2 must be a non-empty square matrix")
        for i in range(n):
            if rows[i][i] % 2:
                raise PreconditionError(f"gram2 diagonal entry {i} is odd")
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise PreconditionError("gram2 must be symmetric")

    @classmethod
    def from_polynomial(cls, dim: int, upper: Iterable[Tuple[int, int, int]]) -> "QuadForm":
        """
        功能说明:
            由多项式系数列表构造二次型；c·x_i·x_j (i<j) 对称拆分进 gram2，
            c·x_i² 记为 gram2[i][i] = 2c。
        参数:
            dim (int): 变量个数 d+1。
            upper (Iterable): (i, j, c) 三元组，要求 i ≤ j。
        返回:
            QuadForm: 对应的二次型。
        """
        gram = [[0] * dim for _ in range(dim)]
        for i, j, c in upper:
            if not (0 <= i <= j < dim):
                raise PreconditionError(f"bad monomial index ({i}, {j}) for dim {dim}")
            if i == j:
                gram[i][i] += 2 * c
            else:
                gram[i][j] += c
                gram[j][i] += c
        return cls(tuple(tuple(row) for row in gram))

    @classmethod
    def diagonal(cls, coefficients: Sequence[int]) -> "QuadForm":
        return cls.from_polynomial(len(coefficients), [(i, i, c) for i, c in enumerate(coefficients)])

    @property
    def dim(self) -> int:
        """d + 1。"""
        return len(self.gram2)

    @property
    def d(self) -> int:
        return len(self.gram2) - 1

    def as_rational(self) -> "RationalForm":
        return RationalForm(tuple(tuple(Fraction(x, 2) for x in row) for row in self.gram2))

    def upper(self) -> List[Tuple[int, int, int]]:
        """多项式系数 (i, j, c)，i ≤ j，零系数省略。"""
        terms = []
        for i in range(self.dim):
            for j in range(i, self.dim):
                c = self.gram2[i][i] // 2 if i == j else self.gram2[i][j]
                if c:
                    terms.append((i, j, c))
        return terms

    @cached_property
    def signature(self) -> Signature:
        return real_signature(self)


@dataclass(frozen=True)
class RationalForm:
    """
    有理二次型，直接存储对称双线性矩阵 B。

    属性:
        matrix (Matrix): 对称有理矩阵；维数可以为 0（空型）。
    """

    matrix: Matrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", frac_matrix(self.matrix))
        n = len(self.matrix)
        if any(len(row) != n for row in self.matrix):
            raise PreconditionError("bilinear matrix must be square")
        for i in range(n):
            for j in range(i):
                if self.matrix[i][j] != self.matrix[j][i]:
                    raise PreconditionError("bilinear matrix must be symmetric")

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def evaluate(self, x: Sequence[object]) -> object:
        return _quadratic_value(self.matrix, x)

    def compose(self, m: Matrix) -> "RationalForm":
        """返回 Q∘M，即矩阵 MᵀBM。"""
        return RationalForm(mat_mul(mat_mul(transpose(m), self.matrix), m))

    def block(self, indices: Sequence[int]) -> "RationalForm":
        return RationalForm(tuple(tuple(self.matrix[i][j] for j in indices) for i in indices))

    def to_integral(self) -> Tuple[QuadForm, Fraction]:
        """
        功能说明:
            缩放为本原整系数二次型。
        返回:
            Tuple[QuadForm, Fraction]: (Q, scale)，满足 Q 的 gram2 = 2·scale·B。
        """
        n = self.dim
        if n == 0:
            raise PreconditionError("cannot integralize the empty form")
        coefficients = [self.matrix[i][i] for i in range(n)]
        coefficients += [2 * self.matrix[i][j] for i in range(n) for j in range(i + 1, n)]
        scale = Fraction(reduce(lcm, (c.denominator for c in coefficients), 1))
        content = reduce(gcd, (abs(int(c * scale)) for c in coefficients), 0)
        if content == 0:
            raise PreconditionError("cannot integralize the zero form")
        scale /= content
        gram = tuple(tuple(int(2 * scale * x) for x in row) for row in self.matrix)
        return QuadForm(gram), scale


def _check_dim(q: QuadForm, *vectors: Sequence[object]) -> None:
    for v in vectors:
        if len(v) != q.dim:
            raise DimensionMismatchError(f"expected vectors of length {q.dim}, got {len(v)}")


def _quadratic_value(matrix: Sequence[Sequence[object]], x: Sequence[object]) -> object:
    total = Fraction(0)
    for i, row in enumerate(matrix):
        if not x[i]:
            continue
        total += x[i] * sum((c * y for c, y in zip(row, x) if c and y), Fraction(0))
    return total


def evaluate(q: QuadForm, x: Sequence[int]) -> int:
    """Q(x) = xᵀ·gram2·x / 2，精确整数。"""
    _check_dim(q, x)
    value = sum(x[i] * sum(q.gram2[i][j] * x[j] for j in range(q.dim)) for i in range(q.dim))
    return value // 2


def bilinear(q: QuadForm, x: Sequence[int], y: Sequence[int]) -> Fraction:
    """B_Q(x, y) = xᵀ·gram2·y / 2。"""
    _check_dim(q, x, y)
    value = sum(x[i] * sum(q.gram2[i][j] * y[j] for j in range(q.dim)) for i in range(q.dim))
    return Fraction(value, 2)


def determinant(q: QuadForm) -> Fraction:
    """det(B_Q) = det(gram2) / 2^{d+1}。"""
    return mat_det(q.gram2) / 2 ** q.dim


def is_nonsingular(q: QuadForm) -> bool:
    return mat_det(q.gram2) != 0


def diagonalize(form: QuadForm | RationalForm) -> List[Fraction]:
    """
    功能说明:
        Lagrange 对称约化：在 ℚ 上做合同变换得到对角元。
        若剩余块的对角线全为零，则用 x_i ← x_i + x_j 制造非零主元。
    参数:
        form (QuadForm | RationalForm): 待约化的二次型。
    返回:
        List[Fraction]: 对角元，个数等于维数，零表示退化方向。
    """
    a = [list(row) for row in (form.as_rational() if isinstance(form, QuadForm) else form).matrix]
    n = len(a)
    diagonal: List[Fraction] = []
    for i in range(n):
        # 1. 选主元：先找非零对角元并交换，否则用非零的非对角元配出非零对角元。
        if a[i][i] == 0:
            swap = next((j for j in range(i + 1, n) if a[j][j] != 0), None)
            if swap is not None:
                a[i], a[swap] = a[swap], a[i]
                for row in a:
                    row[i], row[swap] = row[swap], row[i]
            else:
                partner = next((j for j in range(i + 1, n) if a[i][j] != 0), None)
                if partner is not None:
                    for k in range(n):
                        a[i][k] += a[partner][k]
                    for k in range(n):
                        a[k][i] += a[k][partner]
        pivot = a[i][i]
        diagonal.append(pivot)
        if pivot == 0:
            continue
        # 2. 消去第 i 行与第 i 列的其余元素。
        for j in range(i + 1, n):
            factor = a[j][i] / pivot
            if factor == 0:
                continue
            for k in range(n):
                a[j][k] -= factor * a[i][k]
            for k in range(n):
                a[k][j] -= factor * a[k][i]
    return diagonal


def real_signature(form: QuadForm | RationalForm) -> Signature:
    """由精确对角化统计正、负、零对角元个数。"""
    diagonal = diagonalize(form)
    return Signature(
        pos=sum(1 for x in diagonal if x > 0),
        neg=sum(1 for x in diagonal if x < 0),
        zero=sum(1 for x in diagonal if x == 0),
    )


def form_norm(form: QuadForm | RationalForm) -> Fraction:
    """‖Q‖ 的行和上界 max_i Σ_j |B_ij|。"""
    matrix = form.as_rational().matrix if isinstance(form, QuadForm) else form.matrix
    if not matrix:
        return Fraction(0)
    return max(sum((abs(x) for x in row), Fraction(0)) for row in matrix)


def _is_rational_square(value: Fraction) -> bool:
    if value < 0:
        return False
    return isqrt(value.numerator) ** 2 == value.numerator and isqrt(value.denominator) ** 2 == value.denominator


def is_exceptional(q: QuadForm) -> bool:
    """
    功能说明:
        d = 3 的非奇异、有理迷向二次型等价于 Q_0 当且仅当 det(Q) 为有理平方。
    参数:
        q (QuadForm): 四元二次型。
    返回:
        bool: 是否为例外型。
    """
    from .isotropy import decide_isotropic

    if q.dim != 4:
        raise NotApplicableError(f"exceptional test needs d = 3, got d = {q.d}")
    if not is_nonsingular(q):
        raise NotApplicableError("exceptional test needs a nonsingular form")
    if not decide_isotropic(q, search=False).isotropic:
        raise NotApplicableError("not applicable: form is anisotropic over Q")
    return _is_rational_square(determinant(q))
