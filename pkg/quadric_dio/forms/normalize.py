"""沿全迷向子空间的构造性 m-规范化，以及流所用的结构矩阵 g_A、g_s。"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple, Union

from ..errors import NotIsotropicError, NotNormalizedError, PreconditionError, SingularFormError
from ..utils.rationals import (
    IntVector,
    Matrix,
    identity,
    mat_det,
    mat_inverse,
    matrix_rank,
    nullspace,
    rref_solve,
    transpose,
)
from .qform import QuadForm, RationalForm

logger = logging.getLogger(__name__)

FlowParam = Union[Fraction, int, Sequence[Fraction]]


@dataclass(frozen=True)
class IsoSubspace:
    """
    全迷向子空间的整数基。

    属性:
        basis (Tuple[IntVector, ...]): m 个线性无关整数向量，两两 B_Q 值为 0。
    """

    basis: Tuple[IntVector, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", tuple(tuple(int(x) for x in v) for v in self.basis))

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class Normalization:
    """
    m-规范化结果。

    属性:
        M (Matrix): 可逆有理矩阵，R = Q∘M。
        R (RationalForm): 规范化后的有理二次型。
        m (int): 双曲块个数。
    """

    M: Matrix
    R: RationalForm
    m: int


def _as_rational(form: QuadForm | RationalForm) -> RationalForm:
    return form.as_rational() if isinstance(form, QuadForm) else form


def _bilinear(matrix: Matrix, x: Sequence[Fraction], y: Sequence[Fraction]) -> Fraction:
    return sum((x[i] * matrix[i][j] * y[j] for i in range(len(x)) for j in range(len(y)) if x[i] and y[j]), Fraction(0))


def check_isotropic_subspace(form: QuadForm | RationalForm, subspace: IsoSubspace) -> None:
    """校验 E 全迷向、线性无关，且 m ≤ (d+1)/2。"""
    b = _as_rational(form).matrix
    n = len(b)
    vectors = [tuple(Fraction(x) for x in v) for v in subspace.basis]
    if any(len(v) != n for v in vectors):
        raise NotIsotropicError(f"subspace vectors must have length {n}")
    if 2 * len(vectors) > n:
        raise NotIsotropicError("isotropic subspace dimension exceeds (d+1)/2")
    for i, v in enumerate(vectors):
        for w in vectors[i:]:
            if _bilinear(b, v, w) != 0:
                raise NotIsotropicError(f"vectors {v} and {w} are not orthogonal isotropic")
    if vectors and matrix_rank(vectors) != len(vectors):
        raise NotIsotropicError("subspace basis is not linearly independent")


def is_m_normalized(form: RationalForm, m: int) -> bool:
    """
    判断 R 是否形如 x_0x_d + … + x_{m−1}x_{d−m+1} + R̃(中间坐标)，
    即双曲块之外的 Gram 元素全为 0，配对元素为 1/2。
    """
    b = form.matrix
    n = len(b)
    d = n - 1
    if 2 * m > n:
        return False
    outer = list(range(m)) + list(range(n - m, n))
    for i in outer:
        for j in range(n):
            expected = Fraction(1, 2) if j == d - i else Fraction(0)
            if b[i][j] != expected:
                return False
    return True


def m_normalize(form: QuadForm | RationalForm, subspace: IsoSubspace) -> Normalization:
    """
    功能说明:
        沿全迷向子空间 E 构造 M，使 R = Q∘M 为 m-规范型，且 M⁻¹E = span(e_0..e_{m−1})。
    参数:
        form (QuadForm | RationalForm): 非奇异二次型。
        subspace (IsoSubspace): 维数为 m 的全迷向子空间。
    返回:
        Normalization: (M, R, m)。
    """
    rational = _as_rational(form)
    b = rational.matrix
    n = len(b)
    if mat_det(b) == 0:
        raise SingularFormError("m-normalization needs a nonsingular form")
    check_isotropic_subspace(rational, subspace)
    m = subspace.dim
    vs = [tuple(Fraction(x) for x in v) for v in subspace.basis]

    # 1. 对偶基：解 Vᵀ·B·w_j = e_j / 2，自由变量取 0。
    dual_system = tuple(tuple(sum((v[k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n)) for v in vs)
    ws = []
    for j in range(m):
        rhs = [Fraction(1, 2) if i == j else Fraction(0) for i in range(m)]
        ws.append(rref_solve(dual_system, rhs))

    # 2. 修正 w'_j = w_j − Σ_k B(w_j, w_k)·v_k，使 span(w') 也全迷向。
    gram_w = [[_bilinear(b, ws[j], ws[k]) for k in range(m)] for j in range(m)]
    corrected = []
    for j in range(m):
        w = list(ws[j])
        for k in range(m):
            if gram_w[j][k]:
                w = [w[i] - gram_w[j][k] * vs[k][i] for i in range(n)]
        corrected.append(tuple(w))

    # 3. 补全 E3 = E⊥ ∩ E2⊥ 的基。
    constraints = tuple(
        tuple(sum((u[k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n)) for u in vs + corrected
    )
    middle = nullspace(constraints, n)
    if len(middle) != n - 2 * m:
        raise SingularFormError("orthogonal complement has the wrong dimension")

    columns = vs + middle + corrected[::-1]
    matrix = transpose(tuple(columns))
    result = rational.compose(matrix)
    if not is_m_normalized(result, m):
        raise AssertionError("normalization produced an unexpected Gram pattern")
    logger.debug("m_normalize dim=%s m=%s", n, m)
    return Normalization(M=matrix, R=result, m=m)


def remainder_of(normalization: Normalization) -> RationalForm:
    """中间块 R̃，维数为 d+1−2m，可以为空。"""
    n = normalization.R.dim
    m = normalization.m
    return normalization.R.block(list(range(m, n - m)))


def hyperbolic_coefficient(form: QuadForm | RationalForm) -> Fraction:
    """
    1-规范型 k·x_0·x_d + R̃ 中的系数 k；不是 1-规范型时抛出 NotNormalizedError。
    """
    rational = _as_rational(form)
    b = rational.matrix
    n = len(b)
    d = n - 1
    if n < 2:
        raise NotNormalizedError("a 1-normalized form needs at least two variables")
    k = 2 * b[0][d]
    if k == 0:
        raise NotNormalizedError("x0*xd coefficient vanishes")
    for i in (0, d):
        for j in range(n):
            if j != d - i and b[i][j] != 0:
                raise NotNormalizedError("form is not 1-normalized")
    return k


def block_extension(a: Sequence[Sequence[object]], m: int, d: int) -> Matrix:
    """
    功能说明:
        构造分块对角矩阵 g_A = diag[A, I_{d+1−2m}, (Aᴿ)⁻¹]，Aᴿ 为 A 沿反对角线翻转。
    参数:
        a (Sequence[Sequence]): m×m 可逆有理矩阵。
        m (int): 块大小。
        d (int): 射影维数。
    返回:
        Matrix: (d+1)×(d+1) 有理矩阵，对任意 m-规范型 R 满足 R∘g_A = R。
    """
    block = tuple(tuple(Fraction(x) for x in row) for row in a)
    if len(block) != m or any(len(row) != m for row in block):
        raise PreconditionError(f"A must be {m}x{m}")
    if 2 * m > d + 1:
        raise PreconditionError("block size exceeds (d+1)/2")
    if mat_det(block) == 0:
        raise PreconditionError("A must be invertible")
    flipped = tuple(tuple(block[m - 1 - j][m - 1 - i] for j in range(m)) for i in range(m))
    tail = mat_inverse(flipped)
    n = d + 1
    rows = [list(row) for row in identity(n)]
    for i in range(m):
        for j in range(m):
            rows[i][j] = block[i][j]
            rows[n - m + i][n - m + j] = tail[i][j]
    return tuple(tuple(row) for row in rows)


def flow_matrix(s: FlowParam, m: int, d: int) -> Matrix:
    """
    对角流 g_s：第 i 个坐标乘 1/s_i，第 d−i 个坐标乘 s_i（i < m），其余不变。
    s 可为单个正有理数或长度为 m 的序列。
    """
    scales = [Fraction(x) for x in s] if isinstance(s, (list, tuple)) else [Fraction(s)] * m
    if len(scales) != m:
        raise PreconditionError(f"expected {m} flow parameters, got {len(scales)}")
    if any(x <= 0 for x in scales):
        raise PreconditionError("flow parameters must be positive")
    if 2 * m > d + 1:
        raise PreconditionError("flow block size exceeds (d+1)/2")
    rows = [list(row) for row in identity(d + 1)]
    for i, value in enumerate(scales):
        rows[i][i] = 1 / value
        rows[d - i][d - i] = value
    return tuple(tuple(row) for row in rows)
