"""有理迷向性判定（局部-整体原理）、迷向向量搜索与 ℚ-秩计算。

局部判定基于对角化后的 Hilbert 符号与 Hasse 不变量；
整体见证向量通过有界高度枚举获得，搜索失败只是状态而非异常。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import List, Optional, Sequence, Tuple, Union

import sympy

from ..errors import PreconditionError, SingularFormError
from ..utils.rationals import IntVector, identity, mat_det, mat_mul, mat_vec, primitive_vector
from .normalize import IsoSubspace, m_normalize, remainder_of
from .qform import QuadForm, RankPair, diagonalize, is_nonsingular, real_signature

logger = logging.getLogger(__name__)

REAL = "real"
Place = Union[str, int]

WITNESS_FOUND = "found"
WITNESS_NOT_FOUND = "not_found_within_bound"
WITNESS_NOT_SEARCHED = "not_searched"
WITNESS_NONE = "anisotropic"

RANK_COMPLETE = "complete"
RANK_BOUND_EXCEEDED = "witness_bound_exceeded"

DEFAULT_WITNESS_BOUND = 16
# 二元型的障碍可能出现在无穷多个素数处，只扫描到这里为止。
_BINARY_PRIME_SCAN = 10_000


@dataclass(frozen=True)
class IsotropyVerdict:
    """
    迷向性判定结果。

    属性:
        isotropic (bool): 是否在 ℚ 上迷向（精确判定）。
        witness (Optional[IntVector]): 本原整数迷向向量，可能缺失。
        obstruction (Optional[Place]): 首个局部不可解的位置。
        witness_status (str): found / not_found_within_bound / not_searched / anisotropic。
    """

    isotropic: bool
    witness: Optional[IntVector] = None
    obstruction: Optional[Place] = None
    witness_status: str = WITNESS_NOT_SEARCHED


@dataclass(frozen=True)
class RankResult:
    ranks: RankPair
    subspace: IsoSubspace
    status: str = RANK_COMPLETE
    remainder: Optional[QuadForm] = None
    places: Tuple[Place, ...] = field(default_factory=tuple)


def _squarefree_int(value: Fraction) -> int:
    """有理数的平方类代表：num·den 去掉平方因子，保留符号。"""
    value = Fraction(value)
    if value == 0:
        raise PreconditionError("zero has no square class")
    product = abs(value.numerator * value.denominator)
    core = reduce(lambda acc, item: acc * item[0] if item[1] % 2 else acc, sympy.factorint(product).items(), 1)
    return core if value > 0 else -core


def _split_prime(value: int, p: int) -> Tuple[int, int]:
    alpha = int(sympy.multiplicity(p, value))
    return alpha, value // p**alpha


def hilbert_symbol(a: Fraction | int, b: Fraction | int, place: Place) -> int:
    """
    功能说明:
        计算 Hilbert 符号 (a, b)_v ∈ {1, −1}。
    参数:
        a, b: 非零有理数。
        place (Place): ``"real"`` 或素数 p。
    返回:
        int: 1 或 −1。
    """
    x = _squarefree_int(Fraction(a))
    y = _squarefree_int(Fraction(b))
    if place == REAL:
        return -1 if x < 0 and y < 0 else 1
    if not isinstance(place, int) or not sympy.isprime(place):
        raise PreconditionError(f"place must be 'real' or a prime, got {place!r}")
    p = place
    alpha, u = _split_prime(x, p)
    beta, v = _split_prime(y, p)
    if p == 2:

        def eps(t: int) -> int:
            return ((t - 1) // 2) % 2

        def omega(t: int) -> int:
            return ((t * t - 1) // 8) % 2

        exponent = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u)
        return -1 if exponent % 2 else 1
    sign = -1 if (alpha * beta * (p - 1) // 2) % 2 else 1
    lu = sympy.legendre_symbol(u % p, p) if beta % 2 else 1
    lv = sympy.legendre_symbol(v % p, p) if alpha % 2 else 1
    return sign * lu * lv


def is_local_square(value: Fraction | int, place: Place) -> bool:
    """value 是否为 ℚ_v 中的平方。"""
    x = _squarefree_int(Fraction(value))
    if place == REAL:
        return x > 0
    alpha, unit = _split_prime(x, int(place))
    if alpha % 2:
        return False
    if place == 2:
        return unit % 8 == 1
    return sympy.legendre_symbol(unit % int(place), int(place)) == 1


def _hasse_invariant(diagonal: Sequence[Fraction], place: Place) -> int:
    result = 1
    for i in range(len(diagonal)):
        for j in range(i + 1, len(diagonal)):
            result *= hilbert_symbol(diagonal[i], diagonal[j], place)
    return result


def _locally_isotropic(diagonal: Sequence[Fraction], place: Place) -> bool:
    n = len(diagonal)
    if place == REAL:
        return any(x > 0 for x in diagonal) and any(x < 0 for x in diagonal)
    disc = reduce(lambda acc, x: acc * x, diagonal, Fraction(1))
    if n == 1:
        return False
    if n == 2:
        return is_local_square(-disc, place)
    if n == 3:
        return hilbert_symbol(-1, -disc, place) == _hasse_invariant(diagonal, place)
    if n == 4:
        if not is_local_square(disc, place):
            return True
        return _hasse_invariant(diagonal, place) == hilbert_symbol(-1, -1, place)
    return True


def _relevant_primes(q: QuadForm, diagonal: Sequence[Fraction]) -> List[int]:
    primes = set(sympy.primefactors(2 * abs(int(mat_det(q.gram2)))))
    for x in diagonal:
        primes.update(sympy.primefactors(abs(_squarefree_int(x))))
    primes.add(2)
    odd = sorted(p for p in primes if p != 2)
    return odd + [2]


def local_obstructions(q: QuadForm) -> List[Place]:
    """
    功能说明:
        列出局部不可解的位置：实位置在前，随后奇素数升序，最后是 2。
        二元型在相关素数之外至多补充首个失败的奇素数。
    参数:
        q (QuadForm): 非奇异二次型。
    返回:
        List[Place]: 空列表表示处处局部迷向，即 ℚ 上迷向。
    """
    if not is_nonsingular(q):
        raise SingularFormError("isotropy test needs a nonsingular form")
    diagonal = diagonalize(q)
    places: List[Place] = []
    if not _locally_isotropic(diagonal, REAL):
        places.append(REAL)
    if len(diagonal) == 1:
        return places or [REAL]
    primes = _relevant_primes(q, diagonal)
    failed = [p for p in primes if not _locally_isotropic(diagonal, p)]
    if len(diagonal) == 2 and not failed:
        disc = diagonal[0] * diagonal[1]
        if not _is_global_square(-disc):
            checked = set(primes)
            for p in sympy.primerange(3, _BINARY_PRIME_SCAN):
                if p not in checked and not is_local_square(-disc, p):
                    failed.append(int(p))
                    break
    odd = sorted(p for p in failed if p != 2)
    places.extend(odd)
    if 2 in failed:
        places.append(2)
    return places


def _is_global_square(value: Fraction) -> bool:
    value = Fraction(value)
    if value < 0:
        return False
    return sympy.sqrt(sympy.Rational(value.numerator, value.denominator)).is_Rational


def witness_key(coords: Sequence[int]) -> Tuple[int, ...]:
    """见证向量的选取顺序：高度，支撑大小，然后坐标字典序降序。"""
    return (max(abs(x) for x in coords), sum(1 for x in coords if x)) + tuple(-x for x in coords)


def find_isotropic_vector(q: QuadForm, height_bound: int, *, threads: int = 1) -> Optional[IntVector]:
    """
    功能说明:
        在高度 ≤ height_bound 内寻找本原迷向向量；搜索高度按 1, 2, 4, … 倍增。
    参数:
        q (QuadForm): 非奇异二次型。
        height_bound (int): 搜索高度上界。
        threads (int): 枚举线程数。
    返回:
        Optional[IntVector]: 按 witness_key 最小的向量；找不到时返回 None。
    """
    from ..points.enumeration import enumerate_array

    if height_bound < 1:
        raise PreconditionError("witness height bound must be at least 1")
    bound = 1
    while True:
        bound = min(bound, height_bound)
        rows = enumerate_array(q, bound, strategy="box", threads=threads)
        logger.debug("witness search dim=%s T=%s candidates=%s", q.dim, bound, len(rows))
        if len(rows):
            return min((tuple(int(x) for x in row) for row in rows), key=witness_key)
        if bound >= height_bound:
            return None
        bound *= 2


def decide_isotropic(
    q: QuadForm,
    *,
    height_bound: Optional[int] = None,
    threads: int = 1,
    search: bool = True,
) -> IsotropyVerdict:
    """
    功能说明:
        精确判定 Q 是否在 ℚ 上迷向；迷向时尝试有界搜索见证向量。
    参数:
        q (QuadForm): 非奇异二次型。
        height_bound (Optional[int]): 见证搜索高度，默认 16。
        threads (int): 枚举线程数。
        search (bool): 是否搜索见证向量。
    返回:
        IsotropyVerdict: 判定结果。
    """
    obstructions = local_obstructions(q)
    if obstructions:
        return IsotropyVerdict(False, None, obstructions[0], WITNESS_NONE)
    if not search:
        return IsotropyVerdict(True, None, None, WITNESS_NOT_SEARCHED)
    witness = find_isotropic_vector(q, height_bound or DEFAULT_WITNESS_BOUND, threads=threads)
    status = WITNESS_FOUND if witness is not None else WITNESS_NOT_FOUND
    return IsotropyVerdict(True, witness, None, status)


def q_rank(q: QuadForm, height_bound: int = DEFAULT_WITNESS_BOUND, *, threads: int = 1) -> RankResult:
    """
    功能说明:
        逐次分裂双曲平面计算 p_Q：找迷向向量 → 1-规范化 → 对剩余块递归，
        直到剩余块各向异性。
    参数:
        q (QuadForm): 非奇异二次型。
        height_bound (int): 每一步见证搜索的高度上界。
        threads (int): 枚举线程数。
    返回:
        RankResult: (p_Q, p_R)、原坐标下的全迷向基，以及搜索是否完整。
    """
    if not is_nonsingular(q):
        raise SingularFormError("rank computation needs a nonsingular form")
    p_r = real_signature(q).p_r
    basis: List[IntVector] = []
    embed = identity(q.dim)
    current: Optional[QuadForm] = q
    status = RANK_COMPLETE
    remainder: Optional[QuadForm] = None
    places: Tuple[Place, ...] = ()

    while current is not None and current.dim >= 2:
        verdict = decide_isotropic(current, height_bound=height_bound, threads=threads)
        if not verdict.isotropic:
            places = tuple(local_obstructions(current))
            break
        if verdict.witness is None:
            status = RANK_BOUND_EXCEEDED
            remainder = current
            break
        witness = verdict.witness
        basis.append(primitive_vector(mat_vec(embed, witness)))
        normal = m_normalize(current, IsoSubspace((witness,)))
        n = current.dim
        middle = tuple(tuple(row[j] for j in range(1, n - 1)) for row in normal.M)
        logger.debug("q_rank split=%s witness=%s remainder_dim=%s", len(basis), witness, n - 2)
        if n == 2:
            current = None
            break
        embed = mat_mul(embed, middle)
        current = remainder_of(normal).to_integral()[0]

    ranks = RankPair(p_q=len(basis), p_r=p_r)
    if status == RANK_COMPLETE:
        ranks.check(q.dim)
    return RankResult(ranks=ranks, subspace=IsoSubspace(tuple(basis)), status=status, remainder=remainder, places=places)
