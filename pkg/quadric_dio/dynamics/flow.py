"""对应原理：对角流 g_s 下的范数、精确的对应不等式、光锥最短向量 ρ 与 r_ψ 字典。

流以有理数 s = e^t 参数化，所有核心不等式都在精确算术下检查。
标架矩阵可以落在二次域 ℚ(√D) 中（黄金方向等无理目标仍然精确），
也可以整体是 113 位浮点矩阵。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from ..errors import CorrespondenceViolation, DimensionMismatchError, NotIsotropicError, PreconditionError
from ..forms.isotropy import q_rank
from ..forms.normalize import FlowParam, m_normalize
from ..forms.qform import QuadForm, form_norm
from ..metrics.approx import TargetPoint, ba_estimate
from ..metrics.khintchine import PsiFamily
from ..points.embeddings import remainder_block
from ..points.enumeration import enumerate_array
from ..utils.parallel import ordered_map
from ..utils.rationals import (
    MP,
    IntVector,
    Scalar,
    as_scalar,
    identity,
    is_exact,
    mat_inverse,
    to_mpf,
    unify,
)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = Fraction(1, 50)

ScalarMatrix = Tuple[Tuple[Scalar, ...], ...]


def _scales(s: FlowParam, m: int) -> List[Fraction]:
    values = [Fraction(x) for x in s] if isinstance(s, (list, tuple)) else [Fraction(s)] * m
    if len(values) != m:
        raise DimensionMismatchError(f"expected {m} flow parameters, got {len(values)}")
    if any(x < 1 for x in values):
        raise PreconditionError("flow parameters must satisfy s >= 1")
    return values


def _sum(values: Sequence[Scalar]) -> Scalar:
    terms = unify(*values) if values else (Fraction(0),)
    return reduce(lambda acc, x: acc + x, terms)


def _dot(row: Sequence[Scalar], col: Sequence[Scalar]) -> Scalar:
    return _sum([x * y for x, y in zip(*_paired(row, col)) if x and y])


def _paired(row: Sequence[Scalar], col: Sequence[Scalar]) -> Tuple[Tuple[Scalar, ...], Tuple[Scalar, ...]]:
    both = unify(*row, *col)
    return both[: len(row)], both[len(row) :]


def _mat_vec(a: ScalarMatrix, v: Sequence[Scalar]) -> Tuple[Scalar, ...]:
    return unify(*(_dot(row, v) for row in a))


def _mat_mul(a: ScalarMatrix, b: ScalarMatrix) -> ScalarMatrix:
    columns = list(zip(*b))
    return tuple(unify(*(_dot(row, col) for col in columns)) for row in a)


def _op_norm(a: ScalarMatrix) -> Scalar:
    sums = unify(*(_sum([abs(x) for x in row]) for row in a))
    return max(sums)


def apply_flow(v: Sequence[Scalar], s: FlowParam, m: int = 1) -> Tuple[Scalar, ...]:
    """g_s·v：第 i 个坐标除以 s_i，第 d−i 个坐标乘以 s_i。"""
    scales = _scales(s, m)
    values = list(unify(*v, *scales))
    out, factors = values[: len(v)], values[len(v) :]
    d = len(out) - 1
    for i, factor in enumerate(factors):
        out[i] = out[i] / factor
        out[d - i] = out[d - i] * factor
    return tuple(out)


def dist_to_l1(v: Sequence[Scalar]) -> Scalar:
    """到直线 L_1 = ℝ·e_0 的距离：坐标 1..d 的最大绝对值。"""
    tail = unify(*v)[1:]
    return max((abs(x) for x in tail), default=Fraction(0))


def flow_norm(p: Sequence[object], s: FlowParam, m: int = 1) -> Tuple[Scalar, Scalar]:
    """
    功能说明:
        返回 (‖g_s p‖∞, dist(p, L_1))，整数或有理输入时精确。
    参数:
        p (Sequence): 向量。
        s (FlowParam): s ≥ 1，可为单个值或长度 m 的序列。
        m (int): 流作用的双曲块个数。
    返回:
        Tuple[Scalar, Scalar]: 范数与距离。
    """
    values = [as_scalar(x) for x in p]
    moved = apply_flow(values, s, m)
    return max(abs(x) for x in moved), dist_to_l1(values)


@dataclass(frozen=True)
class CorrespondenceReport:
    checked: int
    skipped: int
    pairs: int
    constant: Fraction
    s_grid: Tuple[Fraction, ...]


def correspondence_constant(form: QuadForm) -> Fraction:
    """C = max(1, (d−1)·‖R̃‖/|k|)，来自 |p_d| ≤ (d−1)·‖R̃‖·dist²/(|k|·‖p‖)。"""
    block, k = remainder_block(form)
    return max(Fraction(1), (form.d - 1) * form_norm(block) / abs(k))


def correspondence_bounds(
    form: QuadForm,
    bound: int,
    s_grid: Sequence[object],
    *,
    points: Optional[np.ndarray] = None,
    threads: int = 1,
) -> CorrespondenceReport:
    """
    功能说明:
        对每个 |p_0| = ‖p‖ 的迷向点与每个 s，精确验证
        max(dist, ‖p‖/s) ≤ ‖g_s p‖ ≤ C·max(dist, ‖p‖/s, s·dist²/‖p‖)。
    参数:
        form (QuadForm): 1-规范整系数型。
        bound (int): 枚举高度 T。
        s_grid (Sequence): s ≥ 1 的有理数列表。
    返回:
        CorrespondenceReport: 检查数、跳过数与常数 C。
    """
    constant = correspondence_constant(form)
    grid = tuple(Fraction(x) for x in s_grid)
    if any(s < 1 for s in grid):
        raise PreconditionError("flow parameters must satisfy s >= 1")
    rows = enumerate_array(form, bound, threads=threads) if points is None else points
    checked = skipped = 0
    for row in rows:
        p = tuple(int(x) for x in row)
        height = max(abs(x) for x in p)
        if abs(p[0]) != height:
            skipped += 1
            continue
        checked += 1
        dist = Fraction(max(abs(x) for x in p[1:]))
        for s in grid:
            norm, _ = flow_norm(p, s)
            lower = max(dist, height / s)
            upper = constant * max(dist, height / s, s * dist * dist / height)
            if not lower <= norm <= upper:
                raise CorrespondenceViolation(
                    f"correspondence bound fails at p={p}, s={s}: {lower} <= {norm} <= {upper}"
                )
    logger.debug("correspondence checked=%s skipped=%s C=%s", checked, skipped, constant)
    return CorrespondenceReport(checked, skipped, checked * len(grid), constant, grid)


@dataclass(frozen=True)
class LatticeFrame:
    """
    格标架 (Mconj, g)：R = Q∘Mconj 为 m-规范型，g ∈ O(R)，作用在 Λ* = Mconj⁻¹ℤ^{d+1} 上。

    属性:
        form (QuadForm): 原整系数型 Q。
        mconj (ScalarMatrix): 有理规范化矩阵。
        g (ScalarMatrix): O(R) 中的元素。
        g_inv (ScalarMatrix): g 的逆。
        m (int): 流作用的块数。
    """

    form: QuadForm
    mconj: ScalarMatrix
    g: ScalarMatrix
    g_inv: ScalarMatrix
    m: int = 1
    label: str = "frame"
    mconj_inv: ScalarMatrix = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mconj_inv", mat_inverse(self.mconj))

    def pullback(self, r: Sequence[int]) -> Tuple[Scalar, ...]:
        """g⁻¹·Mconj⁻¹·r。"""
        return _mat_vec(self.g_inv, _mat_vec(self.mconj_inv, [Fraction(int(x)) for x in r]))

    def direction(self) -> Tuple[Scalar, ...]:
        """π₁ 像：Mconj·g·e_0 的代表元。"""
        return unify(*(row[0] for row in _mat_mul(self.mconj, self.g)))

    def scaling_bound(self) -> Scalar:
        """‖Mconj·g‖_op：任意 r 满足 ‖g⁻¹Mconj⁻¹r‖ ≥ ‖r‖ / 该值。"""
        return _op_norm(_mat_mul(self.mconj, self.g))


def identity_frame(form: QuadForm) -> LatticeFrame:
    eye = identity(form.dim)
    return LatticeFrame(form=form, mconj=eye, g=eye, g_inv=eye, label="identity")


def _unipotent(form: QuadForm, u: Sequence[Scalar]) -> ScalarMatrix:
    block, k = remainder_block(form)
    n = form.dim
    d = n - 1
    width = d - 1
    if len(u) != width:
        raise DimensionMismatchError(f"unipotent parameter must have length {width}")
    exact = all(is_exact(x) for x in u)
    conv: Callable[[object], Scalar] = as_scalar if exact else to_mpf
    b = [[conv(x) for x in row] for row in block.matrix]
    kk = conv(k)
    # B̃(u, e_j) 与 R̃(u)
    bil = [_dot([b[i][j] for i in range(width)], u) for j in range(width)]
    r_u = _dot(u, bil) if width else conv(0)
    rows: List[List[Scalar]] = [[conv(int(i == j)) for j in range(n)] for i in range(n)]
    for i in range(width):
        rows[1 + i][0] = u[i]
        rows[d][1 + i] = -2 * bil[i] / kk
    rows[d][0] = -r_u / kk
    return tuple(unify(*row) if exact else tuple(to_mpf(x) for x in row) for row in rows)


def unipotent_frame(form: QuadForm, u: Sequence[object], label: str = "unipotent") -> LatticeFrame:
    """
    功能说明:
        1-规范型上的单位幂元 n_u：(x0, m, xd) ↦ (x0, m + x0·u, xd − (2B̃(u,m) + x0·R̃(u))/k)，
        满足 n_u·e_0 = Φ(u)，逆为 n_{−u}。
    参数:
        form (QuadForm): 1-规范整系数型。
        u (Sequence): 图卡坐标，可为有理数、二次无理数或浮点。
    返回:
        LatticeFrame: Mconj = I，g = n_u。
    """
    values = list(unify(*u)) if u else []
    eye = identity(form.dim)
    return LatticeFrame(
        form=form,
        mconj=eye,
        g=_unipotent(form, values),
        g_inv=_unipotent(form, [-x for x in values]),
        label=label,
    )


def normalized_frame(form: QuadForm, height_bound: int = 16) -> LatticeFrame:
    """沿 q_rank 找到的极大全迷向子空间做 p_Q-规范化，g 取单位元。"""
    result = q_rank(form, height_bound)
    if not result.subspace.basis:
        raise NotIsotropicError("empty light cone: form is anisotropic")
    normal = m_normalize(form, result.subspace)
    eye = identity(form.dim)
    return LatticeFrame(form=form, mconj=normal.M, g=eye, g_inv=eye, m=normal.m, label="normalized")


@dataclass(frozen=True)
class RhoResult:
    s: Fraction
    rho: Scalar
    certified: bool
    min_point: IntVector


Pulled = Sequence[Tuple[IntVector, Tuple[Scalar, ...]]]


def _pullbacks(frame: LatticeFrame, rows: np.ndarray) -> List[Tuple[IntVector, Tuple[Scalar, ...]]]:
    return [(tuple(int(x) for x in row), frame.pullback(row)) for row in rows]


def _rho_from_pullbacks(frame: LatticeFrame, pulled: Pulled, s: FlowParam, h_max: int) -> RhoResult:
    best_point: Optional[IntVector] = None
    best: Optional[Scalar] = None
    for point, v in pulled:
        norm = max(abs(x) for x in apply_flow(v, s, frame.m))
        if best is None or norm < best:
            best, best_point = norm, point
    if best is None or best_point is None:
        raise NotIsotropicError("empty light cone: no lattice points up to H_max")
    top = max(_scales(s, frame.m))
    reach, scaling, threshold = unify(Fraction(h_max), frame.scaling_bound(), top * 1)
    lhs, rhs = unify(reach / scaling, best)
    certified = bool(lhs > threshold * rhs) if is_exact(lhs) else bool(lhs > to_mpf(threshold) * rhs)
    return RhoResult(s=top, rho=best, certified=certified, min_point=best_point)


def rho_flow(
    frame: LatticeFrame,
    s: FlowParam,
    h_max: int,
    *,
    points: Optional[np.ndarray] = None,
) -> RhoResult:
    """
    功能说明:
        ρ(s) = min ‖g_s·g⁻¹·Mconj⁻¹·r‖，r 取遍高度 ≤ H_max 的光锥整点。
        当 H_max/‖Mconj·g‖ > s·ρ 时，任何未枚举的点都不可能更短，结果记为已认证。
    参数:
        frame (LatticeFrame): 标架。
        s (FlowParam): s ≥ 1。
        h_max (int): 枚举高度。
    返回:
        RhoResult: ρ、是否认证以及取到最小值的点。
    """
    rows = enumerate_array(frame.form, h_max) if points is None else points
    return _rho_from_pullbacks(frame, _pullbacks(frame, rows), s, h_max)


@dataclass(frozen=True)
class OrbitProfile:
    rows: Tuple[RhoResult, ...]
    summary: Dict[str, object]


def _at_least(value: Optional[Scalar], epsilon: Fraction) -> bool:
    if value is None:
        return False
    lhs, rhs = unify(value, epsilon)
    return bool(lhs >= rhs)


def orbit_profile(
    frame: LatticeFrame,
    target: TargetPoint,
    s_grid: Sequence[object],
    h_max: int,
    *,
    epsilon: Fraction = DEFAULT_EPSILON,
    threads: int = 1,
) -> OrbitProfile:
    """
    功能说明:
        并列报告三个等价量：枚举点到 L_1 距离的下确界、ρ(s) 剖面、approx 的 ba_estimate，
        并在阈值 ε 下给出三个布尔判定及其是否一致。
    参数:
        frame (LatticeFrame): 标架，其 π₁ 像应与目标点一致。
        target (TargetPoint): 目标点。
        s_grid (Sequence): s ≥ 1 的网格。
        h_max (int): 枚举高度。
        epsilon (Fraction): 判定阈值。
    返回:
        OrbitProfile: 每个 s 的 ρ 与汇总字典。
    """
    _check_direction(frame, target)
    rows = enumerate_array(frame.form, h_max, threads=threads)
    if len(rows) == 0:
        raise NotIsotropicError("empty light cone: form is anisotropic")
    pulled = _pullbacks(frame, rows)
    grid = [Fraction(s) for s in s_grid]
    results = ordered_map(lambda s: _rho_from_pullbacks(frame, pulled, s, h_max), grid, threads)

    distances = [dist_to_l1(v) for _, v in pulled]
    inf_dist = min(distances)
    certified = [r for r in results if r.certified]
    min_rho = min((r.rho for r in certified), default=None)
    ba = ba_estimate(frame.form, target, h_max, points=rows)

    verdicts = {
        "rho_bounded": _at_least(min_rho, epsilon),
        "dist_positive": _at_least(inf_dist, epsilon),
        "ba_positive": _at_least(ba, epsilon),
    }
    summary: Dict[str, object] = {
        "inf_dist": inf_dist,
        "min_certified_rho": min_rho,
        "certified_until": max((r.s for r in certified), default=None),
        "ba_estimate": ba,
        "epsilon": epsilon,
        "rational_target": any(not d for d in distances),
        **verdicts,
        "agree": len(set(verdicts.values())) == 1,
    }
    logger.debug("orbit_profile frame=%s target=%s agree=%s", frame.label, target.label, summary["agree"])
    return OrbitProfile(rows=tuple(results), summary=summary)


def _check_direction(frame: LatticeFrame, target: TargetPoint) -> None:
    direction = frame.direction()
    if len(direction) != len(target.coords):
        raise DimensionMismatchError("frame and target live in different spaces")
    values = unify(*direction, *target.coords)
    x, y = values[: len(direction)], values[len(direction) :]
    exact = all(is_exact(v) for v in values)
    scale = max(abs(v) for v in x) * max(abs(v) for v in y)
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            cross = abs(x[i] * y[j] - x[j] * y[i])
            if (cross != 0) if exact else (cross > MP.mpf(2) ** -80 * scale):
                raise PreconditionError("frame direction does not match the target point")


def r_psi(psi: PsiFamily, t: object) -> mpmath.mpf:
    """
    功能说明:
        r_ψ(t) = e^{−t}·ψ^{−1}(e^{−t})，在 L = ln q 上用区间求根反解 ψ。
    参数:
        psi (PsiFamily): 需满足 q·ψ(q) → 0。
        t (object): 实数。
    返回:
        mpmath.mpf: r_ψ(t)。
    """
    if not psi.satisfies_decay:
        raise PreconditionError(f"psi with a={psi.a}, b={psi.b} violates q*psi(q) -> 0")
    if psi.scale <= 0:
        raise PreconditionError("r_psi needs a positive psi scale")
    tt = to_mpf(as_scalar(t))
    a, b = to_mpf(psi.a), to_mpf(psi.b)
    log_scale = MP.log(to_mpf(psi.scale))
    ln2 = MP.log(2)

    def f(big_l: mpmath.mpf) -> mpmath.mpf:
        value = log_scale - a * big_l + tt
        if b:
            value -= b * MP.log(big_l / ln2)
        return value

    # ψ 在 L > max(0, −b/a) 上严格递减。
    if b == 0:
        lo = MP.mpf(0)
    elif b > 0:
        lo = MP.mpf(2) ** -60
    else:
        lo = -b / a
    if f(lo) <= 0:
        raise PreconditionError(f"t = {t} is below the invertibility threshold of psi")
    hi = max(2 * lo, MP.mpf(1))
    while f(hi) > 0:
        hi *= 2
    root = MP.findroot(f, (lo, hi), solver="anderson")
    return MP.exp(root - tt)
