"""一般流形的指数数据 n_{k,d}, m_{k,d}, N_{k,d}, c(k,d)，组合暴力核对、Veronese 传递恒等式与单纯形引理的超平面判定。"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatchError, PreconditionError
from ..forms.normalize import hyperbolic_coefficient
from ..forms.qform import QuadForm
from ..points.enumeration import enumerate_array
from ..utils.parallel import ordered_map
from ..utils.rationals import matrix_rank

logger = logging.getLogger(__name__)

STATUS_HOLDS = "holds"
STATUS_FAILS = "fails"
STATUS_INCONCLUSIVE = "inconclusive"

Ball = Tuple[Tuple[Fraction, ...], Fraction]


@dataclass(frozen=True)
class ExponentData:
    k: int
    d: int
    n_kd: int
    m_kd: int
    N_kd: int
    c_kd: Fraction


@dataclass(frozen=True)
class TransferRow:
    k: int
    d: int
    n: int
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


@dataclass(frozen=True)
class SimplexResult:
    """
    单纯形判定结果。

    属性:
        status (str): holds / fails / inconclusive。
        cutoff (Fraction): 高度截断 κ·ρ^{−1/c}。
        points (Tuple): 落在球内且高度不超过截断的点；fails 时即为反例集合。
    """

    status: str
    cutoff: Fraction
    points: Tuple[Tuple[int, ...], ...] = ()

    @property
    def holds(self) -> Optional[bool]:
        if self.status == STATUS_INCONCLUSIVE:
            return None
        return self.status == STATUS_HOLDS


def bracket(n: int, m: int) -> int:
    """[n, m] = C(n+m, m)。"""
    if n < 0 or m < 0:
        raise PreconditionError("bracket arguments must be non-negative")
    return math.comb(n + m, m)


def exponent_data(k: int, d: int) -> ExponentData:
    """
    功能说明:
        贪心求最大的 n 使 k + [k−1,2] + … + [k−1,n] ≤ d，余量记为 m，
        再得 N = k + Σ_{j=2}^{n} j·[k−1,j] + (n+1)·m 与 c = (d+1)/N。
    参数:
        k (int): 流形维数。
        d (int): 射影空间维数，1 ≤ k ≤ d。
    返回:
        ExponentData: 指数数据。
    """
    if not 1 <= k <= d:
        raise PreconditionError(f"need 1 <= k <= d, got k={k}, d={d}")
    n = 1
    used = k
    while used + bracket(k - 1, n + 1) <= d:
        n += 1
        used += bracket(k - 1, n)
    m = d - used
    big_n = k + sum(j * bracket(k - 1, j) for j in range(2, n + 1)) + (n + 1) * m
    return ExponentData(k=k, d=d, n_kd=n, m_kd=m, N_kd=big_n, c_kd=Fraction(d + 1, big_n))


def brute_min_oracle(k: int, d: int) -> int:
    """穷举 min Σ j·n_j，约束 0 ≤ n_j ≤ [k−1, j] 且 Σ n_j = d+1。"""
    if not 1 <= k <= d:
        raise PreconditionError(f"need 1 <= k <= d, got k={k}, d={d}")
    total = d + 1

    @lru_cache(maxsize=None)
    def best(level: int, remaining: int) -> float:
        if remaining == 0:
            return 0
        if level > total:
            return math.inf
        cap = min(bracket(k - 1, level), remaining)
        return min(level * count + best(level + 1, remaining - count) for count in range(cap + 1))

    return int(best(0, total))


def veronese_transfer_row(k: int, d: int, n: int) -> TransferRow:
    if not 1 <= k <= d or n < 1:
        raise PreconditionError(f"need 1 <= k <= d and n >= 1, got ({k}, {d}, {n})")
    lhs = Fraction(d + 1, n * exponent_data(k, d).N_kd)
    target = bracket(d, n)
    rhs = Fraction(target, exponent_data(k, target - 1).N_kd)
    return TransferRow(k=k, d=d, n=n, lhs=lhs, rhs=rhs)


def veronese_transfer_check(k: int, d: int, n: int) -> bool:
    """精确比较 (1/n)·(d+1)/N_{k,d} 与 [d,n]/N_{k,[d,n]−1}。"""
    return veronese_transfer_row(k, d, n).holds


def veronese_transfer_scan(kmax: int, nmax: int) -> List[TransferRow]:
    """对 1 ≤ k ≤ d ≤ kmax、1 ≤ n ≤ nmax 列出传递恒等式两侧的值。"""
    return [veronese_transfer_row(k, d, n) for d in range(1, kmax + 1) for k in range(1, d + 1) for n in range(1, nmax + 1)]


def _height_cutoff(form: QuadForm, rho: Fraction, kappa: Fraction) -> Fraction:
    # 二次超曲面上 k = d−1，c(d−1, d) = 1，截断化为 κ/ρ。
    c = exponent_data(form.d - 1, form.d).c_kd
    if c != 1:
        raise AssertionError("quadric charts expect c(d-1, d) = 1")
    return kappa / rho


def simplex_check(
    form: QuadForm,
    center: Sequence[object],
    rho: Fraction,
    kappa: Fraction,
    t_cap: int,
    *,
    points: Optional[np.ndarray] = None,
) -> SimplexResult:
    """
    功能说明:
        收集高度 ≤ κ/ρ、图卡坐标落在闭球 B(center, ρ)（max 范数）内的有理点，
        判断它们是否全在一个超平面上（坐标矩阵秩 ≤ d）。
    参数:
        form (QuadForm): 1-规范整系数型。
        center (Sequence): 长度 d−1 的有理中心。
        rho (Fraction): 球半径，> 0。
        kappa (Fraction): 常数 κ，> 0。
        t_cap (int): 允许枚举的最大高度。
        points (Optional[np.ndarray]): 预先枚举到 t_cap 的点，批量检查时复用。
    返回:
        SimplexResult: 截断超过 t_cap 时为 inconclusive。
    """
    rho = Fraction(rho)
    kappa = Fraction(kappa)
    if rho <= 0 or kappa <= 0:
        raise PreconditionError("rho and kappa must be positive")
    hyperbolic_coefficient(form)
    centre = tuple(Fraction(c) for c in center)
    if len(centre) != form.d - 1:
        raise DimensionMismatchError(f"center must have length {form.d - 1}")
    cutoff = _height_cutoff(form, rho, kappa)
    if cutoff > t_cap:
        return SimplexResult(STATUS_INCONCLUSIVE, cutoff)
    bound = math.floor(cutoff)
    if bound < 1:
        return SimplexResult(STATUS_HOLDS, cutoff)
    rows = enumerate_array(form, bound) if points is None else points
    if len(rows):
        rows = rows[np.abs(rows).max(axis=1) <= bound]
        rows = rows[rows[:, 0] != 0]
    inside = []
    for row in rows:
        coords = tuple(int(x) for x in row)
        lead = coords[0]
        if all(abs(Fraction(coords[i + 1], lead) - centre[i]) <= rho for i in range(len(centre))):
            inside.append(coords)
    if len(inside) <= form.d or matrix_rank(inside) <= form.d:
        return SimplexResult(STATUS_HOLDS, cutoff, tuple(inside))
    return SimplexResult(STATUS_FAILS, cutoff, tuple(inside))


def random_battery(dim: int, count: int, rhos: Sequence[object], seed: int = 0) -> List[Ball]:
    """在 [−1,1]^dim 中抽取分母为 1000 的有理球心，半径在 rhos 中轮换。"""
    rng = np.random.default_rng(seed)
    numerators = rng.integers(-1000, 1001, size=(count, dim))
    radii = [Fraction(r) for r in rhos]
    return [
        (tuple(Fraction(int(x), 1000) for x in numerators[i]), radii[i % len(radii)])
        for i in range(count)
    ]


def battery_pass_rate(
    form: QuadForm,
    battery: Sequence[Ball],
    kappa: Fraction,
    t_cap: int,
    *,
    points: Optional[np.ndarray] = None,
    threads: int = 1,
) -> Fraction:
    """判定通过的比例；inconclusive 记为未通过。"""
    if not battery:
        return Fraction(1)
    rows = enumerate_array(form, t_cap, threads=threads) if points is None else points
    results = ordered_map(
        lambda ball: simplex_check(form, ball[0], ball[1], kappa, t_cap, points=rows),
        battery,
        threads,
    )
    return Fraction(sum(1 for r in results if r.status == STATUS_HOLDS), len(results))


def fit_kappa(
    form: QuadForm,
    battery: Sequence[Ball],
    t_cap: int,
    kappas: Optional[Sequence[object]] = None,
    *,
    threads: int = 1,
) -> Optional[Fraction]:
    """
    功能说明:
        在 2 的幂阶梯上找使整个 battery 全部通过的最大 κ。
    参数:
        form (QuadForm): 1-规范型。
        battery (Sequence[Ball]): (球心, 半径) 列表。
        t_cap (int): 枚举高度上限。
        kappas (Optional[Sequence]): 候选 κ，默认 2^{−8} … 2^{8}。
    返回:
        Optional[Fraction]: 最大的通过值；没有任何候选通过时为 None。
    """
    ladder = sorted(Fraction(k) for k in (kappas or [Fraction(2) ** e for e in range(-8, 9)]))
    points = enumerate_array(form, t_cap, threads=threads)
    best: Optional[Fraction] = None
    for kappa in ladder:
        rate = battery_pass_rate(form, battery, kappa, t_cap, points=points, threads=threads)
        logger.debug("fit_kappa kappa=%s pass_rate=%s", kappa, rate)
        if rate == 1:
            best = kappa
    return best
