"""Khintchine 型级数判定、例外超曲面上的覆盖界与 Monte Carlo limsup 测度估计。"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Tuple

import mpmath
import numpy as np

from ..errors import PreconditionError
from ..utils.parallel import ordered_map
from ..utils.rationals import MP, Scalar, as_scalar, is_exact, to_mpf, unify

logger = logging.getLogger(__name__)

SERIES_KINDS = ("convergence3", "loglog", "loglog2")

VERDICT_CONVERGES = "converges"
VERDICT_DIVERGES = "diverges"
VERDICT_INCONCLUSIVE = "inconclusive"

CASE_LEFT = "left"
CASE_MIDDLE = "middle"
CASE_RIGHT = "right"

MIN_SAMPLES = 1000
# ℙ¹ 上角度度量与计数常数 (72/π³)² ≈ 5.4，再留出小高度的余量。
MC_BOUND_CONSTANT = 8

_EXPONENT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PsiFamily:
    """
    双参数逼近函数族 ψ(q) = scale · q^{−a} · (log₂ q)^{−b}。

    属性:
        a (Fraction): 幂指数。
        b (Fraction): 对数指数。
        scale (Fraction): 非负常数因子，0 表示 ψ ≡ 0。
    """

    a: Fraction
    b: Fraction
    scale: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.scale < 0:
            raise PreconditionError("psi scale must be non-negative")

    @property
    def satisfies_decay(self) -> bool:
        """q·ψ(q) → 0 且最终不增。"""
        return self.a > 1 or (self.a == 1 and self.b > 0)

    @property
    def tends_to_zero(self) -> bool:
        return self.scale == 0 or self.a > 0 or (self.a == 0 and self.b > 0)

    def value(self, q: object) -> mpmath.mpf:
        """
        功能说明:
            计算 ψ(q)；q ≤ 1 且 b ≠ 0 时对数因子无定义。
        参数:
            q (object): 正的整数、有理数或浮点数。
        返回:
            mpmath.mpf: 113 位精度的函数值。
        """
        x = to_mpf(Fraction(q) if isinstance(q, int) else q)
        if x <= 0:
            raise PreconditionError("psi is defined for q > 0 only")
        if self.scale == 0:
            return MP.mpf(0)
        log_term = MP.mpf(1)
        if self.b != 0:
            if x <= 1:
                raise PreconditionError("psi with a log factor needs q > 1")
            log_term = MP.power(MP.log(x, 2), -to_mpf(self.b))
        return to_mpf(self.scale) * MP.power(x, -to_mpf(self.a)) * log_term

    def at_dyadic(self, n: int) -> mpmath.mpf:
        """ψ(2^n) = scale · 2^{−an} · n^{−b}。"""
        if n < 1:
            raise PreconditionError("dyadic level must be at least 1")
        if self.scale == 0:
            return MP.mpf(0)
        return to_mpf(self.scale) * MP.power(2, -to_mpf(self.a) * n) * MP.power(n, -to_mpf(self.b))

    def describe(self) -> str:
        return f"psi(q)={self.scale}*q^-({self.a})*log2(q)^-({self.b})"


@dataclass(frozen=True)
class SeriesResult:
    """
    级数部分和与解析判定。

    属性:
        kind (str): 级数种类。
        partial (mpmath.mpf): j = 1..j_max 的部分和。
        verdict (str): converges / diverges / inconclusive。
        exponents (Tuple): 通项 2^{ej}·j^β·(log₂ 2j)^γ 中的 (e, β, γ)。
    """

    kind: str
    partial: mpmath.mpf
    verdict: str
    exponents: Tuple[Scalar, Scalar, int]
    j_max: int


def _series_exponents(kind: str, psi: PsiFamily, k: int, s: Scalar, exceptional: bool) -> Tuple[Scalar, Scalar, int]:
    a, b, s = unify(psi.a, psi.b, s)
    if exceptional:
        # T² log T ψ^s、T² log log T ψ²、T² log log T ψ^s。
        if kind == "convergence3":
            return 2 - a * s, 1 - b * s, 0
        if kind == "loglog":
            return 2 - 2 * a, -2 * b, 1
        return 2 - a * s, -b * s, 1
    if kind == "loglog":
        return k - a * k, -b * k, 0
    return k - a * s, -b * s, 0


def _check_hypotheses(kind: str, psi: PsiFamily, k: int, s: Scalar) -> None:
    if kind == "convergence3":
        if not 0 <= s <= k:
            raise PreconditionError(f"convergence3 needs 0 <= s <= k, got s={s}, k={k}")
    elif kind == "loglog":
        if not psi.satisfies_decay:
            raise PreconditionError(f"loglog needs q*psi(q) -> 0 nonincreasing; {psi.describe()} fails")
    else:
        if not 0 < s < k:
            raise PreconditionError(f"loglog2 needs 0 < s < k, got s={s}, k={k}")
        a, b, s = unify(psi.a, psi.b, s)
        lead = k - a * s
        if not (lead < 0 or (lead == 0 and b * s > 0)):
            raise PreconditionError(f"loglog2 needs q^k*psi^s(q) -> 0; {psi.describe()} fails for s={s}")


def _verdict(exponents: Tuple[Scalar, Scalar, int], exact: bool) -> str:
    e, beta, gamma = exponents
    if not exact and abs(e) < _EXPONENT_TOLERANCE:
        return VERDICT_INCONCLUSIVE
    if e < 0:
        return VERDICT_CONVERGES
    if e > 0:
        return VERDICT_DIVERGES
    # 指数临界时 Σ j^β (log j)^γ 收敛当且仅当 β < −1（γ ∈ {0, 1}）。
    return VERDICT_CONVERGES if beta < -1 else VERDICT_DIVERGES


def series_sum(
    kind: str,
    psi: PsiFamily,
    k: int,
    s: Optional[object] = None,
    j_max: int = 64,
    *,
    exceptional: bool = False,
) -> SeriesResult:
    """
    功能说明:
        在 T = 2^j（1 ≤ j ≤ j_max）上累加 Khintchine/Jarník 级数，并按指数比较给出判定。
        一般超曲面的三种级数为 T^k ψ^s、T^k ψ^k、T^k ψ^s；例外超曲面（k = 2）
        换成 T² log T ψ^s、T² log log T ψ²、T² log log T ψ^s。
        log T 记为 j，log log T 记为 log₂(2j)，只差有界倍数。
    参数:
        kind (str): convergence3、loglog 或 loglog2。
        psi (PsiFamily): 逼近函数。
        k (int): 流形维数。
        s (Optional[object]): 指数 s，默认取 k。
        j_max (int): 部分和的项数。
        exceptional (bool): 是否使用例外超曲面的形式。
    返回:
        SeriesResult: 部分和、判定与通项指数。
    """
    if kind not in SERIES_KINDS:
        raise PreconditionError(f"unknown series kind {kind!r}")
    if k < 1 or j_max < 1:
        raise PreconditionError("need k >= 1 and j_max >= 1")
    if exceptional and k != 2:
        raise PreconditionError("the exceptional series live on a surface, k must be 2")
    s_value: Scalar = Fraction(k) if s is None else as_scalar(s)
    exact = is_exact(s_value)
    _check_hypotheses(kind, psi, k, s_value)
    exponents = _series_exponents(kind, psi, k, s_value, exceptional)
    if psi.scale == 0:
        return SeriesResult(kind, MP.mpf(0), VERDICT_CONVERGES, exponents, j_max)
    e, beta, gamma = (to_mpf(x) if not isinstance(x, int) else x for x in exponents)
    power = 2 if kind == "loglog" and exceptional else (k if kind == "loglog" else s_value)
    factor = MP.power(to_mpf(psi.scale), to_mpf(power))
    terms = (
        factor * MP.power(2, e * j) * MP.power(j, beta) * MP.power(MP.log(2 * j, 2), gamma)
        for j in range(1, j_max + 1)
    )
    partial = MP.fsum(terms)
    verdict = _verdict(exponents, exact)
    logger.debug("series kind=%s exceptional=%s exponents=%s verdict=%s", kind, exceptional, exponents, verdict)
    return SeriesResult(kind, partial, verdict, exponents, j_max)


def _compare_with_one(c: Fraction, x: Fraction, y: Fraction, n: int) -> int:
    """精确比较 c·2^x·n^y 与 1：把两边升到分母的 lcm 次幂后只剩整数指数。"""
    if c == 0:
        return -1
    power = math.lcm(x.denominator, y.denominator)
    lhs = c**power * Fraction(2) ** int(x * power) * Fraction(n) ** int(y * power)
    return (lhs > 1) - (lhs < 1)


@dataclass(frozen=True)
class CoveringRow:
    n: int
    case: str
    value: mpmath.mpf


@dataclass(frozen=True)
class CoveringResult:
    """
    覆盖界计算结果。

    属性:
        big_n (int): 层级 N。
        psi_value (mpmath.mpf): ψ(2^N)。
        refined (mpmath.mpf): 逐层三段取值之和。
        naive (mpmath.mpf): (N+1)·4^N·ψ²(2^N)。
        log_form (Optional[mpmath.mpf]): 4^N ψ² · log₂(1/(2^N ψ))，2^Nψ = 1 或 ψ = 0 时为 None。
        rows (Tuple[CoveringRow, ...]): 每个 n 的取值与所属情形。
    """

    big_n: int
    psi_value: mpmath.mpf
    refined: mpmath.mpf
    naive: mpmath.mpf
    log_form: Optional[mpmath.mpf]
    rows: Tuple[CoveringRow, ...]

    @property
    def ratio(self) -> Optional[mpmath.mpf]:
        return None if self.naive == 0 else self.refined / self.naive


def covering_case(psi: PsiFamily, big_n: int, n: int) -> str:
    """
    功能说明:
        判定第 n 层落在哪一段：4^{n−N} ≤ ψ(2^N) 为左段，4^{−n} ≤ ψ(2^N) 为右段，
        否则为中段。比较全程使用有理数。
    参数:
        psi (PsiFamily): 逼近函数。
        big_n (int): 层级 N ≥ 1。
        n (int): 0 ≤ n ≤ N。
    返回:
        str: left / right / middle。
    """
    if not 0 <= n <= big_n:
        raise PreconditionError(f"need 0 <= n <= N, got n={n}, N={big_n}")
    base = -psi.a * big_n
    if _compare_with_one(psi.scale, base - 2 * n + 2 * big_n, -psi.b, big_n) >= 0:
        return CASE_LEFT
    if _compare_with_one(psi.scale, base + 2 * n, -psi.b, big_n) >= 0:
        return CASE_RIGHT
    return CASE_MIDDLE


def covering_bound(psi: PsiFamily, big_n: int) -> CoveringResult:
    """
    功能说明:
        对 0 ≤ n ≤ N 计算 min(1, 4^n ψ)·min(1, 4^{N−n} ψ)（ψ = ψ(2^N)）的三段表达式，
        求和得到细化界，并与朴素界 (N+1)·4^N·ψ² 对照。
    参数:
        psi (PsiFamily): 逼近函数。
        big_n (int): 层级 N ≥ 1。
    返回:
        CoveringResult: 细化界、朴素界与逐层表。
    """
    if big_n < 1:
        raise PreconditionError("covering level N must be at least 1")
    if _compare_with_one(psi.scale, (1 - psi.a) * big_n, -psi.b, big_n) > 0:
        raise PreconditionError(f"covering bound needs psi(2^N) <= 2^-N; {psi.describe()} fails at N={big_n}")
    value = psi.at_dyadic(big_n)
    full = MP.power(4, big_n)
    rows: List[CoveringRow] = []
    for n in range(big_n + 1):
        case = covering_case(psi, big_n, n)
        if case == CASE_LEFT:
            amount = MP.power(4, n) * value
        elif case == CASE_RIGHT:
            amount = MP.power(4, big_n - n) * value
        else:
            amount = full * value * value
        rows.append(CoveringRow(n, case, amount))
    refined = MP.fsum(row.value for row in rows)
    naive = (big_n + 1) * full * value * value
    log_form = None
    if value > 0 and MP.power(2, big_n) * value < 1:
        log_form = full * value * value * MP.log(1 / (MP.power(2, big_n) * value), 2)
    return CoveringResult(big_n, value, refined, naive, log_form, tuple(rows))


@lru_cache(maxsize=32)
def height_band_angles(n: int) -> np.ndarray:
    """
    功能说明:
        ℙ¹ 中高度位于 [2^n, 2^{n+1}) 的有理点，按角度 atan2(x1, x0) mod π 排序返回。
        高度为 h 的点是 [h : j]（|j| ≤ h）与 [j : h]（|j| < h），要求 gcd = 1。
    参数:
        n (int): 层级，n ≥ 0。
    返回:
        np.ndarray: 只读的升序角度数组。
    """
    if n < 0:
        raise PreconditionError("height band index must be non-negative")
    chunks = []
    for h in range(2**n, 2 ** (n + 1)):
        j = np.arange(-h, h + 1, dtype=np.int64)
        j = j[np.gcd(j, h) == 1]
        chunks.append(np.arctan2(j, h))
        inner = j[np.abs(j) < h]
        chunks.append(np.arctan2(np.full(inner.shape, h), inner))
    angles = np.sort(np.mod(np.concatenate(chunks), np.pi))
    angles.setflags(write=False)
    logger.debug("height band n=%s points=%s", n, angles.size)
    return angles


def _near(angles: np.ndarray, theta: np.ndarray, radius: float) -> np.ndarray:
    # 最近点只可能是插入位置两侧之一；|sin Δ| 以 π 为周期，首尾自然衔接。
    idx = np.searchsorted(angles, theta)
    left = angles[(idx - 1) % angles.size]
    right = angles[idx % angles.size]
    dist = np.minimum(np.abs(np.sin(theta - left)), np.abs(np.sin(theta - right)))
    return dist <= radius


@dataclass(frozen=True)
class MonteCarloResult:
    """
    Monte Carlo 估计。

    属性:
        estimate (float): ∪_n A_{n,N} 的测度估计。
        stderr (float): 二项分布标准误差 √(p(1−p)/samples)。
        hits (int): 落入并集的样本数。
        samples (int): 样本总数。
        radius (float): 邻域半径 ψ(2^N)。
        seed (int): 随机种子。
        chunks (int): 独立子流个数。
    """

    estimate: float
    stderr: float
    hits: int
    samples: int
    radius: float
    seed: int
    chunks: int


def _chunk_hits(task: Tuple[int, np.random.SeedSequence], big_n: int, radius: float) -> int:
    size, seq = task
    rng = np.random.default_rng(seq)
    theta = rng.random((size, 2)) * np.pi
    near_x = [_near(height_band_angles(n), theta[:, 0], radius) for n in range(big_n + 1)]
    near_y = [_near(height_band_angles(n), theta[:, 1], radius) for n in range(big_n + 1)]
    covered = np.zeros(size, dtype=bool)
    for n in range(big_n + 1):
        covered |= near_x[n] & near_y[big_n - n]
    return int(covered.sum())


def mc_limsup_measure(
    psi: PsiFamily,
    big_n: int,
    samples: int,
    *,
    seed: int = 0,
    chunk_size: int = 10_000,
    threads: int = 1,
) -> MonteCarloResult:
    """
    功能说明:
        在 ℙ¹ × ℙ¹ 的角度参数 [0, π)² 上均匀采样，估计
        ∪_{n=0}^{N} B(Z_n, ψ(2^N)) × B(Z_{N−n}, ψ(2^N)) 的归一化测度。
        样本切成固定大小的块，每块使用 SeedSequence 派生的独立子流，
        因此结果与线程数无关。
    参数:
        psi (PsiFamily): 逼近函数。
        big_n (int): 层级 N ≥ 1。
        samples (int): 样本数，至少 1000。
        seed (int): 随机种子。
        chunk_size (int): 每块样本数。
        threads (int): 工作线程数。
    返回:
        MonteCarloResult: 估计值与标准误差。
    """
    if samples < MIN_SAMPLES:
        raise PreconditionError(f"Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}")
    if big_n < 1:
        raise PreconditionError("covering level N must be at least 1")
    radius = float(psi.at_dyadic(big_n))
    if radius <= 0 or radius >= 1:
        full = 1.0 if radius >= 1 else 0.0
        return MonteCarloResult(full, 0.0, int(full) * samples, samples, radius, seed, 0)
    chunk_size = max(chunk_size, 1)
    sizes = [min(chunk_size, samples - start) for start in range(0, samples, chunk_size)]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    for n in range(big_n + 1):
        height_band_angles(n)
    counts = ordered_map(lambda task: _chunk_hits(task, big_n, radius), list(zip(sizes, streams)), threads)
    hits = sum(counts)
    logger.debug("mc merged chunks=%s hits=%s samples=%s", len(counts), hits, samples)
    p = hits / samples
    stderr = math.sqrt(p * (1 - p) / samples)
    return MonteCarloResult(p, stderr, hits, samples, radius, seed, len(sizes))
