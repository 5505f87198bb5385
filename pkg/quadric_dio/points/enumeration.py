"""二次超曲面上有界高度有理点的枚举与计数。

两种精确策略：
- box：首坐标切片 × 中间坐标网格，最后一个坐标由一元二次方程解出；
- divisor：对 1-规范型 k·x_0·x_d + R̃(m)，把盒内 k·e·f 的值排序后按 −R̃(m) 二分匹配因子对。
计数另走 count_by_pairs：对可拆出孤立变量对的型不列点，用直方图与 Möbius 反演直接求 N(T)。
结果统一做本原化、符号规范化、去重，再按 (高度, 坐标字典序降序) 排序。
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import sympy

from ..errors import NotNormalizedError, PreconditionError, SingularFormError
from ..forms.normalize import hyperbolic_coefficient
from ..forms.qform import QuadForm, is_nonsingular
from ..utils.parallel import chunked, ordered_map
from ..utils.rationals import MP, IntVector, primitive_vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProjPoint:
    """
    有理射影点：本原、首个非零坐标为正的整数向量。

    属性:
        coords (IntVector): 整数坐标。
    """

    coords: IntVector

    def __post_init__(self) -> None:
        coords = tuple(int(x) for x in self.coords)
        if primitive_vector(coords) != coords:
            raise PreconditionError(f"{coords} is not primitive and sign-normalized")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_vector(cls, values: Sequence[object]) -> "ProjPoint":
        return cls(primitive_vector(values))

    @property
    def height(self) -> int:
        return max(abs(x) for x in self.coords)

    def __len__(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class CountRow:
    T: int
    N: int
    ratio_k: mpmath.mpf
    ratio_log: Optional[mpmath.mpf]


def canonical_key(coords: Sequence[int]) -> Tuple[int, ...]:
    """标准点序：高度升序，然后坐标按字典序降序。"""
    return (max(abs(x) for x in coords),) + tuple(-x for x in coords)


def _finalize(rows: np.ndarray, dim: int) -> np.ndarray:
    """本原化过滤、符号规范化、去重并按标准点序排序。"""
    if rows.size == 0:
        return np.zeros((0, dim), dtype=np.int64)
    rows = rows[np.gcd.reduce(np.abs(rows), axis=1) == 1]
    if rows.size == 0:
        return np.zeros((0, dim), dtype=np.int64)
    lead = np.argmax(rows != 0, axis=1)
    signs = np.sign(rows[np.arange(len(rows)), lead])
    rows = np.unique(rows * signs[:, None], axis=0)
    heights = np.abs(rows).max(axis=1)
    keys = tuple(-rows[:, j] for j in range(dim - 1, -1, -1)) + (heights,)
    return rows[np.lexsort(keys)]


def _isqrt_array(values: np.ndarray) -> np.ndarray:
    roots = np.floor(np.sqrt(values.astype(np.float64))).astype(np.int64)
    for _ in range(2):
        roots = np.where(roots * roots > values, roots - 1, roots)
        roots = np.where((roots + 1) * (roots + 1) <= values, roots + 1, roots)
    return roots


def _solve_last(gram: np.ndarray, free: np.ndarray, bound: int) -> np.ndarray:
    """
    功能说明:
        给定前 d 个坐标，解出最后一个坐标 t 使 Q = 0：a·t² + b·t + c = 0。
    参数:
        gram (np.ndarray): gram2。
        free (np.ndarray): 形如 (M, d) 的前 d 个坐标。
        bound (int): 坐标绝对值上界 T。
    返回:
        np.ndarray: 形如 (K, d+1) 的全部整数解。
    """
    n = gram.shape[0]
    a = int(gram[n - 1, n - 1]) // 2
    b = free @ gram[: n - 1, n - 1]
    c = np.einsum("ij,jk,ik->i", free, gram[: n - 1, : n - 1], free) // 2
    pieces: List[np.ndarray] = []

    def _emit(mask: np.ndarray, t: np.ndarray) -> None:
        keep = mask & (np.abs(t) <= bound)
        if keep.any():
            pieces.append(np.column_stack([free[keep], t[keep]]))

    if a != 0:
        disc = b * b - 4 * a * c
        ok = disc >= 0
        root = _isqrt_array(np.where(ok, disc, 0))
        ok &= root * root == disc
        for sign in (1, -1):
            numerator = -b + sign * root
            exact = ok & (numerator % (2 * a) == 0)
            _emit(exact, np.where(exact, numerator // (2 * a), 0))
    else:
        linear = b != 0
        safe_b = np.where(linear, b, 1)
        exact = linear & ((-c) % safe_b == 0)
        _emit(exact, np.where(exact, (-c) // safe_b, 0))
        # b = c = 0：整条直线上的 t 都是解。
        for row in free[(b == 0) & (c == 0)]:
            ts = np.arange(-bound, bound + 1, dtype=np.int64)
            pieces.append(np.column_stack([np.tile(row, (len(ts), 1)), ts]))
    if not pieces:
        return np.zeros((0, n), dtype=np.int64)
    return np.concatenate(pieces)


def _middle_grid(count: int, bound: int) -> np.ndarray:
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    if count == 0:
        return np.zeros((1, 0), dtype=np.int64)
    mesh = np.meshgrid(*([axis] * count), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _box_enumerate(q: QuadForm, bound: int, threads: int, slice_rows: int) -> np.ndarray:
    gram = np.array(q.gram2, dtype=np.int64)
    n = q.dim
    if n == 1:
        return np.zeros((0, 1), dtype=np.int64)
    middle = _middle_grid(n - 2, bound)

    def _run(leads: Sequence[int]) -> np.ndarray:
        parts = []
        for lead in leads:
            free = np.column_stack([np.full(len(middle), lead, dtype=np.int64), middle])
            parts.append(_solve_last(gram, free, bound))
        return np.concatenate(parts) if parts else np.zeros((0, n), dtype=np.int64)

    slices = chunked(list(range(0, bound + 1)), slice_rows)
    logger.debug("box enumeration dim=%s T=%s slices=%s", n, bound, len(slices))
    results = ordered_map(_run, slices, threads)
    return np.concatenate(results)


def isolated_pair(q: QuadForm) -> Optional[Tuple[int, int]]:
    """
    功能说明:
        找一对变量 (i, j)，使 Q = B(x_i, x_j) + Q'(其余变量)，即两块之间没有交叉项。
        1-规范型优先取 (0, d)。
    参数:
        q (QuadForm): 二次型。
    返回:
        Optional[Tuple[int, int]]: 变量下标对；不存在时为 None。
    """
    n = q.dim
    if n < 2:
        return None
    pairs = [(0, n - 1)] + [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) != (0, n - 1)]
    for i, j in pairs:
        if all(q.gram2[i][x] == 0 and q.gram2[j][x] == 0 for x in range(n) if x not in (i, j)):
            return i, j
    return None


def _pair_values(gram: np.ndarray, pair: Tuple[int, int], u: np.ndarray, v: np.ndarray) -> np.ndarray:
    i, j = pair
    return (gram[i, i] // 2) * u * u + gram[i, j] * u * v + (gram[j, j] // 2) * v * v


def _rest_values(gram: np.ndarray, rest: Sequence[int], grid: np.ndarray) -> np.ndarray:
    if not rest:
        return np.zeros(len(grid), dtype=np.int64)
    block = gram[np.ix_(rest, rest)]
    return np.einsum("ij,jk,ik->i", grid, block, grid) // 2


def _split_enumerate(q: QuadForm, pair: Tuple[int, int], bound: int, threads: int, slice_rows: int) -> np.ndarray:
    """
    功能说明:
        Q = B(x_i, x_j) + Q'(m)：把盒内全部 (x_i, x_j) 的 B 值排序，
        对每个 m 用二分查找取出 B = −Q'(m) 的整段解，全程向量化。
        1-规范型取 B = k·x_0·x_d，即按 k·e·f 的因子对匹配。
    """
    n = q.dim
    gram = np.array(q.gram2, dtype=np.int64)
    rest = [x for x in range(n) if x not in pair]
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    u, v = (m.ravel() for m in np.meshgrid(axis, axis, indexing="ij"))
    values = _pair_values(gram, pair, u, v)
    order = np.argsort(values, kind="stable")
    values, u, v = values[order], u[order], v[order]
    middle = _middle_grid(len(rest), bound)
    need = -_rest_values(gram, rest, middle)

    def _run(indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        lo = np.searchsorted(values, need[idx], side="left")
        hi = np.searchsorted(values, need[idx], side="right")
        counts = hi - lo
        total = int(counts.sum())
        rows = np.zeros((total, n), dtype=np.int64)
        if total == 0:
            return rows
        starts = np.cumsum(counts) - counts
        picks = np.repeat(lo, counts) + np.arange(total) - np.repeat(starts, counts)
        rows[:, pair[0]] = u[picks]
        rows[:, pair[1]] = v[picks]
        if rest:
            rows[:, rest] = np.repeat(middle[idx], counts, axis=0)
        return rows

    slices = chunked(range(len(middle)), slice_rows * 64)
    logger.debug("split enumeration dim=%s pair=%s T=%s slices=%s", n, pair, bound, len(slices))
    return np.concatenate(ordered_map(_run, slices, threads))


@lru_cache(maxsize=65536)
def _divisors(value: int) -> Tuple[int, ...]:
    return tuple(sympy.divisors(value))


def _divisor_lines(q: QuadForm, bound: int, threads: int, slice_rows: int) -> np.ndarray:
    """d = 2：中间坐标只有 2T+1 个取值，逐个对 −R̃(m)/k 做因子分解，避免 (2T+1)² 的乘积表。"""
    k = q.gram2[0][2]
    c = q.gram2[1][1] // 2
    ts = np.arange(-bound, bound + 1, dtype=np.int64)

    def _run(mids: Sequence[int]) -> np.ndarray:
        parts: List[List[int]] = []
        blocks: List[np.ndarray] = []
        for mid in mids:
            product = -c * mid * mid
            if product % k:
                continue
            target = product // k
            if target == 0:
                zeros = np.zeros(len(ts), dtype=np.int64)
                blocks.append(np.column_stack([ts, np.full(len(ts), mid, dtype=np.int64), zeros]))
                blocks.append(np.column_stack([zeros, np.full(len(ts), mid, dtype=np.int64), ts]))
                continue
            for e in _divisors(abs(target)):
                if e > bound:
                    break
                other = target // e
                if abs(other) <= bound:
                    parts.append([e, mid, other])
                    parts.append([-e, mid, -other])
        if parts:
            blocks.append(np.array(parts, dtype=np.int64))
        return np.concatenate(blocks) if blocks else np.zeros((0, 3), dtype=np.int64)

    return np.concatenate(ordered_map(_run, chunked(range(-bound, bound + 1), slice_rows * 16), threads))


def _divisor_enumerate(q: QuadForm, bound: int, threads: int, slice_rows: int) -> np.ndarray:
    if q.d == 2:
        return _divisor_lines(q, bound, threads, slice_rows)
    return _split_enumerate(q, (0, q.d), bound, threads, slice_rows)


def _mobius_table(bound: int) -> np.ndarray:
    mu = np.ones(bound + 1, dtype=np.int64)
    mu[0] = 0
    for p in sympy.primerange(2, bound + 1):
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


def _vector_count(q: QuadForm, pair: Tuple[int, int], bound: int, threads: int, slice_rows: int) -> int:
    """
    功能说明:
        A(t)：满足 Q(x) = 0、‖x‖∞ ≤ t 的非零整数向量个数（不要求本原）。
        先对 (x_i, x_j) 的 B 值做直方图，再逐行累加 Q' 的相反数所在的桶。
    """
    n = q.dim
    gram = np.array(q.gram2, dtype=np.int64)
    rest = [x for x in range(n) if x not in pair]
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    i, j = pair
    # |B(u, v)| ≤ (|g_ii|/2 + |g_ij| + |g_jj|/2)·t²，直方图下标按此平移。
    offset = (abs(int(gram[i, i])) // 2 + abs(int(gram[i, j])) + abs(int(gram[j, j])) // 2) * bound * bound
    histogram = np.zeros(2 * offset + 1, dtype=np.int64)
    for rows in chunked(axis, slice_rows * 4):
        u = np.repeat(np.asarray(rows), len(axis))
        v = np.tile(axis, len(rows))
        histogram += np.bincount(_pair_values(gram, pair, u, v) + offset, minlength=len(histogram))
    if not rest:
        return int(histogram[offset]) - 1
    head, tail = rest[0], rest[1:]
    grid = _middle_grid(len(tail), bound)
    tail_values = _rest_values(gram, tail, grid)
    cross = grid @ gram[head, tail] if tail else np.zeros(len(grid), dtype=np.int64)
    square = gram[head, head] // 2

    def _run(leads: Sequence[int]) -> int:
        lead = np.asarray(leads, dtype=np.int64)[:, None]
        idx = offset - (square * lead * lead + lead * cross[None, :] + tail_values[None, :])
        keep = (idx >= 0) & (idx < len(histogram))
        return int(histogram[idx[keep]].sum())

    total = sum(ordered_map(_run, chunked(axis, slice_rows), threads))
    return total - 1


def count_by_pairs(
    q: QuadForm,
    t_values: Sequence[int],
    pair: Tuple[int, int],
    *,
    threads: int = 1,
    slice_rows: int = 64,
) -> List[int]:
    """
    功能说明:
        不列出点而直接求 N(T)：本原向量数 P(T) = Σ_g μ(g)·A(⌊T/g⌋)，N(T) = P(T)/2。
    参数:
        q (QuadForm): 在 ``pair`` 处可拆分的二次型。
        t_values (Sequence[int]): 高度上界列表。
        pair (Tuple[int, int]): isolated_pair 给出的变量对。
    返回:
        List[int]: 与 t_values 一一对应的 N(T)。
    """
    mu = _mobius_table(max(t_values))
    cache: Dict[int, int] = {}

    def vectors(t: int) -> int:
        if t not in cache:
            cache[t] = _vector_count(q, pair, t, threads, slice_rows)
        return cache[t]

    counts = []
    for t in t_values:
        primitive = sum(int(mu[g]) * vectors(t // g) for g in range(1, t + 1) if mu[g])
        counts.append(primitive // 2)
    logger.debug("pair count dim=%s pair=%s sizes=%s", q.dim, pair, len(cache))
    return counts


def _is_one_normalized(q: QuadForm) -> bool:
    try:
        hyperbolic_coefficient(q)
    except NotNormalizedError:
        return False
    return True


def enumerate_array(
    q: QuadForm,
    bound: int,
    *,
    strategy: str = "auto",
    threads: int = 1,
    slice_rows: int = 64,
) -> np.ndarray:
    """
    功能说明:
        枚举 M_Q 上高度不超过 T 的全部有理点，返回 (N, d+1) 的 int64 数组。
    参数:
        q (QuadForm): 非奇异整系数二次型。
        bound (int): 高度上界 T ≥ 1。
        strategy (str): ``auto``、``box`` 或 ``divisor``。
        threads (int): 线程数，结果与之无关。
        slice_rows (int): 每个并行任务的切片大小。
    返回:
        np.ndarray: 按标准点序排列的本原、符号规范化坐标。
    """
    if bound < 1:
        raise PreconditionError("height bound T must be at least 1")
    if not is_nonsingular(q):
        raise SingularFormError("point enumeration needs a nonsingular form")
    if strategy == "auto":
        strategy = "divisor" if _is_one_normalized(q) else "box"
    if strategy == "divisor":
        if not _is_one_normalized(q):
            raise NotNormalizedError("divisor enumeration needs a 1-normalized form")
        raw = _divisor_enumerate(q, bound, threads, slice_rows)
    elif strategy == "box":
        raw = _box_enumerate(q, bound, threads, slice_rows)
    else:
        raise PreconditionError(f"unknown enumeration strategy {strategy!r}")
    rows = _finalize(raw, q.dim)
    logger.debug("enumerate dim=%s T=%s strategy=%s points=%s", q.dim, bound, strategy, len(rows))
    return rows


def enumerate_points(
    q: QuadForm,
    bound: int,
    *,
    strategy: str = "auto",
    threads: int = 1,
    slice_rows: int = 64,
) -> List[ProjPoint]:
    """M_Q 上高度 ≤ T 的射影有理点列表（标准点序）。"""
    rows = enumerate_array(q, bound, strategy=strategy, threads=threads, slice_rows=slice_rows)
    return [ProjPoint(tuple(int(x) for x in row)) for row in rows]


def count_points(
    q: QuadForm,
    t_values: Sequence[int],
    *,
    strategy: str = "auto",
    threads: int = 1,
    slice_rows: int = 64,
) -> List[CountRow]:
    """
    功能说明:
        对每个 T 统计 N(T)，并给出 N/T^k（k = d−1）以及 d = 3 时的 N/(T²·ln T)，比值为 113 位浮点。
        ``auto`` 下 d ≥ 3 且可拆分的型走 count_by_pairs，不物化点集；其余按枚举结果计数。
    参数:
        q (QuadForm): 非奇异二次型。
        t_values (Sequence[int]): 高度上界列表。
    返回:
        List[CountRow]: 与输入顺序一致的计数表。
    """
    if not t_values:
        return []
    if min(t_values) < 1:
        raise PreconditionError("height bound T must be at least 1")
    if not is_nonsingular(q):
        raise SingularFormError("point counting needs a nonsingular form")
    pair = isolated_pair(q) if strategy == "auto" and q.dim >= 4 else None
    if pair is not None:
        counts = count_by_pairs(q, t_values, pair, threads=threads, slice_rows=slice_rows)
    else:
        rows = enumerate_array(q, max(t_values), strategy=strategy, threads=threads, slice_rows=slice_rows)
        heights = np.abs(rows).max(axis=1) if len(rows) else np.zeros(0, dtype=np.int64)
        counts = [int(np.searchsorted(heights, t, side="right")) for t in t_values]
    k = q.d - 1
    table = []
    for t, n_t in zip(t_values, counts):
        ratio_log = MP.mpf(n_t) / (t * t * MP.log(t)) if q.d == 3 and t > 1 else None
        table.append(CountRow(T=t, N=n_t, ratio_k=MP.mpf(n_t) / MP.mpf(t) ** k, ratio_log=ratio_log))
    return table


def primitive_p1_points(bound: int) -> List[IntVector]:
    """ℙ¹ 上高度 ≤ bound 的全部有理点（符号规范化）。"""
    points = {
        primitive_vector((x0, x1))
        for x0, x1 in itertools.product(range(0, bound + 1), range(-bound, bound + 1))
        if (x0, x1) != (0, 0) and math.gcd(x0, x1) == 1
    }
    return sorted(points, key=canonical_key)
