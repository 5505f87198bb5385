"""内在逼近实验：射影距离、逼近谱、Dirichlet / 强 Dirichlet 剖面、BA 估计，
以及沿逼近无理实迷向点的目标序列观察 Dirichlet 常数是否一致。

距离先用 numpy 双精度做一次筛选，再对候选点做精确（有理数或 a+b√D）
或 113 位浮点的确认，保证记录与剖面不受舍入影响。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import sympy

from ..errors import DimensionMismatchError, PreconditionError
from ..forms.qform import QuadForm
from ..points.embeddings import chart_lift, remainder_block
from ..points.enumeration import ProjPoint, enumerate_array
from ..utils.rationals import MP, IntVector, QuadraticSurd, Scalar, as_scalar, golden_ratio, is_exact, to_mpf

logger = logging.getLogger(__name__)

_REL_TOL = 1e-9
_ABS_TOL = 1e-12
# 浮点目标点满足 |Q(x)| ≤ 该值 × ‖x‖² 即视为在二次曲面上。
_FLOAT_ON_QUADRIC = MP.mpf(2) ** -90


def _unify(values: Sequence[object]) -> List[Scalar]:
    scalars = [as_scalar(v) for v in values]
    if all(is_exact(v) for v in scalars):
        return scalars
    return [to_mpf(v) for v in scalars]


def form_value(form: QuadForm, coords: Sequence[object]) -> Scalar:
    """在一般标量向量上求 Q 的值。"""
    values = _unify(coords)
    if len(values) != form.dim:
        raise DimensionMismatchError(f"expected {form.dim} coordinates, got {len(values)}")
    exact = all(is_exact(v) for v in values)
    total: object = Fraction(0) if exact else MP.mpf(0)
    for i, row in enumerate(form.gram2):
        for j, c in enumerate(row):
            if c and values[i] and values[j]:
                total = total + values[i] * values[j] * (Fraction(c, 2) if exact else MP.mpf(c) / 2)
    return total  # type: ignore[return-value]


@dataclass(frozen=True)
class TargetPoint:
    """
    二次曲面上的目标点 [x]。

    属性:
        form (QuadForm): 所在的二次型。
        coords (Tuple[Scalar, ...]): 代表元，可为有理数、同一二次域的 a+b√D 或 113 位浮点。
        label (str): 输出时使用的名字。
    """

    form: QuadForm
    coords: Tuple[Scalar, ...]
    label: str = "target"

    def __post_init__(self) -> None:
        values = tuple(_unify(self.coords))
        object.__setattr__(self, "coords", values)
        if not any(values):
            raise PreconditionError("target representative must be nonzero")
        value = form_value(self.form, values)
        if self.exact:
            if value != 0:
                raise PreconditionError(f"target {self.label} is not on the quadric")
        else:
            scale = max(abs(v) for v in values) ** 2
            if abs(value) > _FLOAT_ON_QUADRIC * scale:
                raise PreconditionError(f"target {self.label} is off the quadric beyond tolerance")

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for v in self.coords)

    @property
    def rational(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.coords)

    def as_point(self) -> Optional[ProjPoint]:
        return ProjPoint.from_vector(self.coords) if self.rational else None

    def floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.coords], dtype=np.float64)

    @classmethod
    def from_chart(cls, form: QuadForm, x: Sequence[object], label: str = "target") -> "TargetPoint":
        return cls(form, chart_lift(form, x), label)


@dataclass(frozen=True)
class ApproxRecord:
    point: ProjPoint
    height: int
    dist: Scalar


@dataclass(frozen=True)
class ProfileRow:
    T: int
    value: Optional[Scalar]
    best_point: Optional[IntVector]


def golden_conic_target(form: QuadForm) -> TargetPoint:
    """圆锥曲线 x0x2 = x1² 上的 [1 : φ : φ²]。"""
    phi = golden_ratio()
    return TargetPoint.from_chart(form, [phi], label="golden")


def liouville_number(terms: int = 6) -> mpmath.mpf:
    """Σ_{j=1}^{terms} 2^{−j!}（113 位精度内截断）。"""
    return MP.fsum(MP.mpf(2) ** (-math.factorial(j)) for j in range(1, terms + 1))


def proj_distance(x: Sequence[object] | TargetPoint, y: Sequence[object] | ProjPoint) -> Scalar:
    """
    功能说明:
        d([x],[y]) = max_{i<j} |x_i y_j − x_j y_i| / (‖x‖∞·‖y‖∞)，有理或二次域输入时精确。
    参数:
        x: 目标点或任意非零向量。
        y: 射影点或任意非零向量。
    返回:
        Scalar: 距离，取值于 [0, 2]。
    """
    xs = x.coords if isinstance(x, TargetPoint) else x
    ys = y.coords if isinstance(y, ProjPoint) else y
    if len(xs) != len(ys):
        raise DimensionMismatchError("points live in different projective spaces")
    values = _unify(list(xs) + list(ys))
    a, b = values[: len(xs)], values[len(xs) :]
    norm_a = max(abs(v) for v in a)
    norm_b = max(abs(v) for v in b)
    if not norm_a or not norm_b:
        raise PreconditionError("zero vector has no projective class")
    cross = max(
        (abs(a[i] * b[j] - a[j] * b[i]) for i in range(len(a)) for j in range(i + 1, len(a))),
        default=Fraction(0),
    )
    return cross / (norm_a * norm_b)


def float_distances(target: TargetPoint, rows: np.ndarray) -> np.ndarray:
    """双精度筛选用的距离向量。"""
    if len(rows) == 0:
        return np.zeros(0, dtype=np.float64)
    xf = target.floats()
    y = rows.astype(np.float64)
    n = len(xf)
    cross = np.zeros(len(rows), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            cross = np.maximum(cross, np.abs(xf[i] * y[:, j] - xf[j] * y[:, i]))
    return cross / (np.abs(xf).max() * np.abs(y).max(axis=1))


def _candidates(values: np.ndarray) -> np.ndarray:
    if len(values) == 0:
        return np.zeros(0, dtype=np.int64)
    best = values.min()
    return np.nonzero(values <= best * (1 + _REL_TOL) + _ABS_TOL)[0]


def _exact_argmin(indices: Sequence[int], score) -> Tuple[int, Scalar]:
    """在候选下标中精确取最小值，并列时保留标准点序中靠前的一个。"""
    best_index, best_value = -1, None
    for index in indices:
        value = score(int(index))
        if best_value is None or value < best_value:
            best_index, best_value = int(index), value
    return best_index, best_value  # type: ignore[return-value]


def _point(rows: np.ndarray, index: int) -> IntVector:
    return tuple(int(v) for v in rows[index])


def spectrum(
    form: QuadForm,
    target: TargetPoint,
    t_max: int,
    *,
    points: Optional[np.ndarray] = None,
    threads: int = 1,
) -> List[ApproxRecord]:
    """
    功能说明:
        高度 ≤ T_max 的全部有理点中逐高度取最优点，只保留严格改进距离的记录。
    参数:
        form (QuadForm): 二次型。
        target (TargetPoint): 目标点。
        t_max (int): 高度上界。
        points (Optional[np.ndarray]): 预先枚举的点。
    返回:
        List[ApproxRecord]: 高度严格递增、距离严格递减的记录序列。
    """
    rows = enumerate_array(form, t_max, threads=threads) if points is None else points
    if len(rows) == 0:
        return []
    heights = np.abs(rows).max(axis=1)
    rows, heights = rows[heights <= t_max], heights[heights <= t_max]
    dists = float_distances(target, rows)
    records: List[ApproxRecord] = []
    best: Optional[Scalar] = None
    best_f = math.inf
    starts = np.flatnonzero(np.r_[True, heights[1:] != heights[:-1]])
    ends = np.r_[starts[1:], len(rows)]
    for start, end in zip(starts, ends):
        group = dists[start:end]
        if group.min() > best_f * (1 + _REL_TOL) + _ABS_TOL:
            continue
        local = _candidates(group) + start
        index, value = _exact_argmin(local, lambda i: proj_distance(target, _point(rows, i)))
        if best is None or value < best:
            best, best_f = value, float(value)
            records.append(ApproxRecord(ProjPoint(_point(rows, index)), int(heights[index]), value))
            if value == 0:
                break
    logger.debug("spectrum target=%s T=%s records=%s", target.label, t_max, len(records))
    return records


def _prefix_profile(
    rows: np.ndarray,
    t_grid: Sequence[int],
    float_scores: np.ndarray,
    exact_score,
) -> List[Tuple[int, Optional[Scalar], Optional[IntVector]]]:
    heights = np.abs(rows).max(axis=1) if len(rows) else np.zeros(0, dtype=np.int64)
    table = []
    for t in t_grid:
        end = int(np.searchsorted(heights, t, side="right"))
        if end == 0:
            table.append((t, None, None))
            continue
        index, value = _exact_argmin(_candidates(float_scores[:end]), exact_score)
        table.append((t, value, _point(rows, index)))
    return table


def dirichlet_profile(
    form: QuadForm,
    target: TargetPoint,
    t_grid: Sequence[int],
    *,
    points: Optional[np.ndarray] = None,
    threads: int = 1,
) -> List[ProfileRow]:
    """D(T) = min_{H(r) ≤ T} H(r)·dist(r, x)，精确或 113 位。"""
    rows = enumerate_array(form, max(t_grid), threads=threads) if points is None else points
    heights = np.abs(rows).max(axis=1) if len(rows) else np.zeros(0, dtype=np.int64)
    scores = heights * float_distances(target, rows)

    def exact(i: int) -> Scalar:
        return int(heights[i]) * proj_distance(target, _point(rows, i))

    return [ProfileRow(t, v, p) for t, v, p in _prefix_profile(rows, t_grid, scores, exact)]


def strong_dirichlet_profile(
    form: QuadForm,
    target: TargetPoint,
    t_grid: Sequence[int],
    *,
    points: Optional[np.ndarray] = None,
    threads: int = 1,
) -> List[ProfileRow]:
    """
    功能说明:
        S(T) = min_{H(r) ≤ T} sqrt(H(r)·T)·dist(r, x)。
        先精确最小化 H·dist²，再开方，结果为 113 位浮点。
    """
    rows = enumerate_array(form, max(t_grid), threads=threads) if points is None else points
    heights = np.abs(rows).max(axis=1) if len(rows) else np.zeros(0, dtype=np.int64)
    dists = float_distances(target, rows)
    scores = heights * dists * dists

    def exact(i: int) -> Scalar:
        dist = proj_distance(target, _point(rows, i))
        return int(heights[i]) * dist * dist

    table = []
    for t, value, point in _prefix_profile(rows, t_grid, scores, exact):
        table.append(ProfileRow(t, None if value is None else MP.sqrt(to_mpf(value) * t), point))
    return table


def ba_estimate(
    form: QuadForm,
    target: TargetPoint,
    t_max: int,
    *,
    points: Optional[np.ndarray] = None,
    threads: int = 1,
) -> Optional[Scalar]:
    """逼近谱各记录上 H·dist 的最小值；没有有理点时返回 None。"""
    records = spectrum(form, target, t_max, points=points, threads=threads)
    if not records:
        return None
    return min(r.height * r.dist for r in records)


def _exact_floor(value: Scalar) -> int:
    if isinstance(value, Fraction):
        return math.floor(value)
    if isinstance(value, QuadraticSurd):
        guess = math.floor(float(value))
        while guess > value:
            guess -= 1
        while guess + 1 <= value:
            guess += 1
        return guess
    return int(MP.floor(value))


def partial_quotients(alpha: object, count: int) -> List[int]:
    """
    连分数部分商 [a0; a1, a2, …]，最多 count 项。
    有理输入在展开结束时提前停止；浮点输入在余项几乎为零时停止。
    """
    value = as_scalar(alpha)
    quotients: List[int] = []
    for _ in range(count):
        a = _exact_floor(value)
        quotients.append(a)
        frac = value - a
        if is_exact(frac):
            if frac == 0:
                break
        elif MP.almosteq(frac, 0, abs_eps=MP.mpf(2) ** -100):
            break
        value = 1 / frac
    return quotients


def convergents(alpha: object, count: int) -> List[Fraction]:
    """由部分商递推出的渐近分数 p_n/q_n。"""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    result = []
    for a in partial_quotients(alpha, count):
        p_prev, p = a * p_prev + p, p_prev
        q_prev, q = a * q_prev + q, q_prev
        result.append(Fraction(p_prev, q_prev))
    return result


@dataclass(frozen=True)
class UniformityRow:
    step: int
    offset: Fraction
    limit_dist: Scalar
    dirichlet: Optional[Scalar]
    strong_dirichlet: Optional[Scalar]
    best_point: Optional[IntVector]


def _square_split(n: int) -> Tuple[int, int]:
    """n = s²·D，D 无平方因子。"""
    square, free = 1, 1
    for p, e in sympy.factorint(n).items():
        square *= p ** (e // 2)
        free *= p ** (e % 2)
    return square, free


def real_isotropic_chart(form: QuadForm) -> Tuple[Tuple[Scalar, ...], int]:
    """
    功能说明:
        在对角的剩余块 R̃ 里找一对异号系数 a_i、a_j，使 −a_j/a_i 不是有理平方，
        取图卡坐标 w：w_i = √(−a_j/a_i)，w_j = 1，其余为 0。
        [1 : w : 0] 所在的实全迷向平面 span(e_0, (0, w, 0)) 不是有理子空间。
    参数:
        form (QuadForm): 1-规范型。
    返回:
        Tuple[Tuple[Scalar, ...], int]: (w, j)，j 是之后用来扰动的有理坐标。
    """
    block, _ = remainder_block(form)
    m = block.matrix
    width = len(m)
    if any(m[i][j] for i in range(width) for j in range(width) if i != j):
        raise PreconditionError("uniformity sequence needs a diagonal remainder block")
    for i in range(width):
        for j in range(width):
            if i == j or m[i][i] * m[j][j] >= 0:
                continue
            ratio = -m[j][j] / m[i][i]
            square, free = _square_split(ratio.numerator * ratio.denominator)
            if free == 1:
                continue
            w: List[Scalar] = [Fraction(0)] * width
            w[i] = QuadraticSurd(Fraction(0), Fraction(square, ratio.denominator), free)
            w[j] = Fraction(1)
            return tuple(w), j
    raise PreconditionError("remainder block has no irrational real isotropic direction")


def uniformity_profile(
    form: QuadForm,
    t_grid: Sequence[int],
    steps: int,
    *,
    points: Optional[np.ndarray] = None,
    threads: int = 1,
) -> List[UniformityRow]:
    """
    功能说明:
        目标序列 x_j = Φ(w + 2^{−j}·e_j) 逼近实迷向平面上的无理点 Φ(w)。
        对每个 x_j 给出网格上 max_T D(T) 与 max_T S(T)，即高度 ≤ max(T) 时能观察到的 Dirichlet 常数。
        只报告这些值随 j 的变化，不对极限下结论。
    参数:
        form (QuadForm): 剩余块为对角型的 1-规范型。
        t_grid (Sequence[int]): 高度网格。
        steps (int): 序列长度。
    返回:
        List[UniformityRow]: 每个 j 一行，limit_dist 为 x_j 到极限点的射影距离。
    """
    if steps < 1:
        raise PreconditionError("uniformity sequence needs at least one step")
    w, j = real_isotropic_chart(form)
    limit = TargetPoint.from_chart(form, w, label="limit")
    rows = enumerate_array(form, max(t_grid), threads=threads) if points is None else points
    table: List[UniformityRow] = []
    for step in range(1, steps + 1):
        offset = Fraction(1, 2**step)
        u = list(w)
        u[j] = u[j] + offset
        target = TargetPoint.from_chart(form, u, label=f"step{step}")
        weak = [r.value for r in dirichlet_profile(form, target, t_grid, points=rows) if r.value is not None]
        strong = [r for r in strong_dirichlet_profile(form, target, t_grid, points=rows) if r.value is not None]
        top = max(strong, key=lambda r: r.value, default=None)
        table.append(
            UniformityRow(
                step=step,
                offset=offset,
                limit_dist=proj_distance(limit, target.coords),
                dirichlet=max(weak, default=None),
                strong_dirichlet=None if top is None else top.value,
                best_point=None if top is None else top.best_point,
            )
        )
    logger.debug("uniformity steps=%s T=%s", steps, max(t_grid))
    return table
