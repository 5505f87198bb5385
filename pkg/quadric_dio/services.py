"""服务层：把各模块的计算组合成 JSON 友好的报告字典，CLI 与 MCP 工具共用。"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from .config import AppConfig, parse_rational
from .errors import NotNormalizedError, PreconditionError, QuadricError
from .forms.isotropy import decide_isotropic, q_rank
from .forms.loader import form_hash, form_to_record
from .forms.normalize import hyperbolic_coefficient, m_normalize, remainder_of
from .forms.qform import QuadForm, determinant, form_norm, is_exceptional, is_nonsingular, real_signature
from .metrics.approx import (
    TargetPoint,
    ba_estimate,
    convergents,
    dirichlet_profile,
    liouville_number,
    partial_quotients,
    spectrum,
    strong_dirichlet_profile,
    uniformity_profile,
)
from .metrics.exponents import brute_min_oracle, exponent_data, veronese_transfer_scan
from .metrics.khintchine import (
    MC_BOUND_CONSTANT,
    SERIES_KINDS,
    PsiFamily,
    covering_bound,
    mc_limsup_measure,
    series_sum,
)
from .dynamics.flow import correspondence_bounds, orbit_profile, r_psi, unipotent_frame
from .points.enumeration import count_points, enumerate_array
from .reporting.formatter import to_jsonable
from .utils.rationals import Scalar, golden_ratio

logger = logging.getLogger(__name__)

DEFAULT_TARGET = "golden"
CF_TERMS = 12


@dataclass
class ServiceContext:
    """
    服务函数共享的依赖。

    属性:
        config (AppConfig): 环境变量载入的全局配置。
    """

    config: AppConfig

    @property
    def witness_bound(self) -> int:
        return self.config.witness.height_bound


def create_service_context(config: Optional[AppConfig] = None) -> ServiceContext:
    """构建 CLI 与 MCP 服务器共用的上下文。"""
    return ServiceContext(config=config or AppConfig.from_env())


def _report(command: str, q: Optional[QuadForm], seed: int, columns: Sequence[str], rows: List[List[Any]], **extra: Any) -> Dict[str, Any]:
    report: Dict[str, Any] = {
        "command": command,
        "seed": seed,
        "form_sha256": form_hash(q) if q is not None else None,
        "form": form_to_record(q) if q is not None else None,
        "columns": list(columns),
        "rows": rows,
    }
    report.update(extra)
    return to_jsonable(report)


def dyadic_grid(limit: int) -> List[int]:
    """1, 2, 4, …, 以及 limit 本身（若不是 2 的幂）。"""
    if limit < 1:
        raise PreconditionError("grid limit must be at least 1")
    grid = [2**j for j in range(limit.bit_length()) if 2**j <= limit]
    if grid[-1] != limit:
        grid.append(limit)
    return grid


def rank_report(context: ServiceContext, q: QuadForm, *, seed: int = 0, threads: int = 1) -> Dict[str, Any]:
    """
    功能说明:
        计算 (p_Q, p_R)、迷向判定与见证向量、行列式与例外型判定。
    参数:
        context (ServiceContext): 服务上下文。
        q (QuadForm): 非奇异二次型。
    返回:
        Dict[str, Any]: 报告字典。
    """
    bound = context.witness_bound
    result = q_rank(q, bound, threads=threads)
    verdict = decide_isotropic(q, height_bound=bound, threads=threads)
    exceptional = is_exceptional(q) if q.d == 3 and verdict.isotropic else None
    signature = real_signature(q)
    logger.info("rank p_q=%s p_r=%s status=%s", result.ranks.p_q, result.ranks.p_r, result.status)
    row = [
        result.ranks.p_q,
        result.ranks.p_r,
        result.status,
        list(verdict.witness) if verdict.witness else None,
        verdict.obstruction,
        determinant(q),
        exceptional,
    ]
    return _report(
        "rank",
        q,
        seed,
        ["p_q", "p_r", "status", "witness", "obstruction", "determinant", "exceptional"],
        [row],
        p_Q=result.ranks.p_q,
        p_R=result.ranks.p_r,
        isotropic=verdict.isotropic,
        witness=verdict.witness,
        witness_status=verdict.witness_status,
        obstruction=verdict.obstruction,
        places=list(result.places),
        subspace=[list(v) for v in result.subspace.basis],
        signature=signature,
        determinant=determinant(q),
        exceptional=exceptional,
    )


def normalize_report(context: ServiceContext, q: QuadForm, *, seed: int = 0, threads: int = 1) -> Dict[str, Any]:
    """沿 q_rank 找到的极大全迷向子空间做 p_Q-规范化，输出 M、R 与中间块。"""
    result = q_rank(q, context.witness_bound, threads=threads)
    if not result.subspace.basis:
        raise PreconditionError("form is anisotropic over Q; nothing to normalize")
    normal = m_normalize(q, result.subspace)
    remainder = remainder_of(normal)
    logger.info("normalize dim=%s m=%s", q.dim, normal.m)
    rows = [[i] + list(row) for i, row in enumerate(normal.M)]
    return _report(
        "normalize",
        q,
        seed,
        ["row"] + [f"m{j}" for j in range(q.dim)],
        rows,
        m=normal.m,
        M=normal.M,
        R=normal.R.matrix,
        remainder=remainder.matrix,
        subspace=[list(v) for v in result.subspace.basis],
        status=result.status,
    )


def points_report(context: ServiceContext, q: QuadForm, tmax: int, *, seed: int = 0, threads: int = 1) -> Dict[str, Any]:
    """高度 ≤ T 的全部有理点，按标准点序输出。"""
    enum = context.config.enumeration
    array = enumerate_array(q, tmax, strategy=enum.strategy, threads=threads, slice_rows=enum.slice_rows)
    rows = [[int(abs(r).max())] + [int(x) for x in r] for r in array]
    logger.info("points dim=%s tmax=%s count=%s", q.dim, tmax, len(rows))
    return _report("points", q, seed, ["height"] + [f"x{i}" for i in range(q.dim)], rows, tmax=tmax, count=len(rows))


def count_report(context: ServiceContext, q: QuadForm, tmax: int, *, seed: int = 0, threads: int = 1) -> Dict[str, Any]:
    """在 2 的幂网格上统计 N(T) 与两种归一化比值。"""
    table = count_points(q, dyadic_grid(tmax), strategy=context.config.enumeration.strategy, threads=threads)
    rows = [[r.T, r.N, r.ratio_k, r.ratio_log] for r in table]
    logger.info("count dim=%s tmax=%s N=%s", q.dim, tmax, table[-1].N if table else 0)
    return _report("count", q, seed, ["T", "N", "ratio_k", "ratio_log"], rows, tmax=tmax)


def exponents_report(context: ServiceContext, kmax: int, *, transfer: bool = False, nmax: int = 3, seed: int = 0) -> Dict[str, Any]:
    """1 ≤ k ≤ d ≤ kmax 的指数表，并与穷举最小值对照；可附带 Veronese 传递行。"""
    rows = []
    for d in range(1, kmax + 1):
        for k in range(1, d + 1):
            data = exponent_data(k, d)
            rows.append([k, d, data.n_kd, data.m_kd, data.N_kd, data.c_kd, brute_min_oracle(k, d)])
    extra: Dict[str, Any] = {"kmax": kmax}
    if transfer:
        extra["transfer"] = [
            {"k": r.k, "d": r.d, "n": r.n, "lhs": r.lhs, "rhs": r.rhs, "holds": r.holds}
            for r in veronese_transfer_scan(kmax, nmax)
        ]
    logger.info("exponents kmax=%s rows=%s transfer=%s", kmax, len(rows), transfer)
    return _report("exponents", None, seed, ["k", "d", "n", "m", "N", "c", "oracle_N"], rows, **extra)


def parse_target(q: QuadForm, description: Optional[str]) -> Sequence[Scalar]:
    """
    功能说明:
        把目标描述解析为 1-规范型的图卡坐标 u（长度 d−1）。
        ``golden`` 取 (φ, 0, …)，``liouville`` 取 (Σ2^{−j!}, 0, …)，
        ``chart:u1,u2,...`` 给出有理坐标。
    参数:
        q (QuadForm): 1-规范整系数型。
        description (Optional[str]): 目标描述，默认 golden。
    返回:
        Sequence[Scalar]: 图卡坐标。
    """
    hyperbolic_coefficient(q)
    width = q.d - 1
    text = (description or DEFAULT_TARGET).strip()
    if text == "golden":
        return [golden_ratio()] + [Fraction(0)] * (width - 1)
    if text == "liouville":
        return [liouville_number()] + [Fraction(0)] * (width - 1)
    if text.startswith("chart:"):
        values = [parse_rational(v) for v in text[len("chart:") :].split(",") if v.strip()]
        if len(values) != width:
            raise PreconditionError(f"chart target needs {width} coordinates, got {len(values)}")
        return values
    raise PreconditionError(f"unknown target {text!r}; use golden, liouville or chart:u1,...")


def approx_report(
    context: ServiceContext,
    q: QuadForm,
    target_spec: Optional[str],
    tmax: int,
    *,
    uniformity: int = 0,
    seed: int = 0,
    threads: int = 1,
) -> Dict[str, Any]:
    """
    功能说明:
        对目标点给出逼近谱、Dirichlet 与强 Dirichlet 剖面、BA 估计，
        圆锥曲线上再附连分数部分商作为对照。uniformity > 0 且 p_Q < p_R 时
        附上逼近无理实迷向点的目标序列上 Dirichlet 常数的变化。
    参数:
        context (ServiceContext): 服务上下文。
        q (QuadForm): 1-规范整系数型。
        target_spec (Optional[str]): 目标描述。
        tmax (int): 枚举高度上界。
        uniformity (int): 序列长度，0 表示不计算。
    返回:
        Dict[str, Any]: 报告字典。
    """
    u = parse_target(q, target_spec)
    label = (target_spec or DEFAULT_TARGET).strip()
    target = TargetPoint.from_chart(q, u, label=label)
    points = enumerate_array(q, tmax, threads=threads)
    grid = dyadic_grid(tmax)
    weak = dirichlet_profile(q, target, grid, points=points)
    strong = strong_dirichlet_profile(q, target, grid, points=points)
    rows = [[w.T, w.value, s.value, list(w.best_point) if w.best_point else None] for w, s in zip(weak, strong)]
    records = spectrum(q, target, tmax, points=points)
    extra: Dict[str, Any] = {
        "target": label,
        "tmax": tmax,
        "ba_estimate": ba_estimate(q, target, tmax, points=points),
        "spectrum": [{"height": r.height, "point": list(r.point.coords), "dist": r.dist} for r in records],
    }
    if q.d == 2:
        extra["partial_quotients"] = partial_quotients(u[0], CF_TERMS)
        extra["convergents"] = convergents(u[0], CF_TERMS)
    if uniformity:
        ranks = q_rank(q, context.witness_bound, threads=threads).ranks
        if ranks.p_q >= ranks.p_r:
            raise PreconditionError(f"uniformity sequence needs p_Q < p_R, got ({ranks.p_q}, {ranks.p_r})")
        extra["uniformity"] = uniformity_profile(q, grid, uniformity, points=points)
    logger.info("approx target=%s tmax=%s records=%s", label, tmax, len(records))
    return _report("approx", q, seed, ["T", "dirichlet", "strong_dirichlet", "best_point"], rows, **extra)


def orbit_report(
    context: ServiceContext,
    q: QuadForm,
    target_spec: Optional[str],
    hmax: int,
    s_grid: Sequence[Fraction],
    *,
    psi: Optional[PsiFamily] = None,
    seed: int = 0,
    threads: int = 1,
) -> Dict[str, Any]:
    """
    功能说明:
        在单位幂标架 n_u 上计算 ρ(s) 剖面与三方判定，并精确核对对应原理的双侧不等式。
        ψ 满足衰减条件时附上 r_ψ(ln s)。
    参数:
        context (ServiceContext): 服务上下文。
        q (QuadForm): 1-规范整系数型。
        target_spec (Optional[str]): 目标描述。
        hmax (int): 枚举高度 H_max。
        s_grid (Sequence[Fraction]): s ≥ 1 的网格。
        psi (Optional[PsiFamily]): 逼近函数。
    返回:
        Dict[str, Any]: 报告字典。
    """
    u = parse_target(q, target_spec)
    label = (target_spec or DEFAULT_TARGET).strip()
    target = TargetPoint.from_chart(q, u, label=label)
    frame = unipotent_frame(q, u, label=label)
    profile = orbit_profile(frame, target, s_grid, hmax, threads=threads)
    rows = [[r.s, r.rho, r.certified, list(r.min_point)] for r in profile.rows]
    correspondence = correspondence_bounds(q, hmax, s_grid, threads=threads)
    extra: Dict[str, Any] = {
        "target": label,
        "hmax": hmax,
        "summary": profile.summary,
        "correspondence": {
            "checked": correspondence.checked,
            "skipped": correspondence.skipped,
            "pairs": correspondence.pairs,
            "constant": correspondence.constant,
        },
    }
    if psi is not None and psi.satisfies_decay and psi.scale > 0:
        extra["r_psi"] = [{"s": s, "r": r_psi(psi, _log(s))} for s in s_grid]
    logger.info("orbit target=%s hmax=%s agree=%s", label, hmax, profile.summary["agree"])
    return _report("orbit", q, seed, ["s", "rho", "certified", "min_point"], rows, **extra)


def _log(s: Fraction) -> float:
    return math.log(s.numerator) - math.log(s.denominator)


def khintchine_report(
    context: ServiceContext,
    psi: PsiFamily,
    big_n: int,
    samples: int,
    *,
    seed: int = 0,
    threads: int = 1,
    j_max: int = 64,
) -> Dict[str, Any]:
    """
    功能说明:
        例外曲面 k = 2 上的三种级数（一般形式与例外形式各一份），覆盖界逐层表，
        以及 Monte Carlo 测度估计和 MC_BOUND_CONSTANT × 细化界的对照。
        违反前置条件的部分以错误对象记录，不中断整份报告。
    参数:
        context (ServiceContext): 服务上下文。
        psi (PsiFamily): 逼近函数。
        big_n (int): 覆盖层级 N。
        samples (int): Monte Carlo 样本数。
        seed (int): 随机种子。
    返回:
        Dict[str, Any]: 报告字典。
    """
    series = []
    for exceptional in (False, True):
        for kind in SERIES_KINDS:
            s = Fraction(3, 2) if kind == "loglog2" else Fraction(2)
            entry: Dict[str, Any] = {"kind": kind, "exceptional": exceptional, "s": s}
            try:
                result = series_sum(kind, psi, 2, s, j_max, exceptional=exceptional)
                entry.update(partial=result.partial, verdict=result.verdict, exponents=list(result.exponents))
            except QuadricError as exc:
                entry.update(verdict="rejected", error=exc.to_payload())
            series.append(entry)

    rows: List[List[Any]] = []
    covering: Dict[str, Any]
    try:
        bound = covering_bound(psi, big_n)
        rows = [[r.n, r.case, r.value] for r in bound.rows]
        covering = {
            "N": big_n,
            "psi": bound.psi_value,
            "refined": bound.refined,
            "naive": bound.naive,
            "ratio": bound.ratio,
            "log_form": bound.log_form,
        }
    except QuadricError as exc:
        bound = None
        covering = {"N": big_n, "error": exc.to_payload()}

    mc = mc_limsup_measure(
        psi, big_n, samples, seed=seed, chunk_size=context.config.sampling.chunk_size, threads=threads
    )
    mc_entry: Dict[str, Any] = {
        "estimate": mc.estimate,
        "stderr": mc.stderr,
        "hits": mc.hits,
        "samples": mc.samples,
        "radius": mc.radius,
        "chunks": mc.chunks,
        "bound_constant": MC_BOUND_CONSTANT,
    }
    if bound is not None:
        mc_entry["within_bound"] = mc.estimate - 3 * mc.stderr <= MC_BOUND_CONSTANT * float(bound.refined)
    logger.info("khintchine psi=%s N=%s samples=%s estimate=%s", psi.describe(), big_n, samples, mc.estimate)
    return _report(
        "khintchine",
        None,
        seed,
        ["n", "case", "value"],
        rows,
        psi={"a": psi.a, "b": psi.b, "scale": psi.scale},
        series=series,
        covering=covering,
        mc=mc_entry,
    )


def form_summary(q: QuadForm) -> Dict[str, Any]:
    """二次型的基本不变量，供 MCP 资源与调试使用。"""
    nonsingular = is_nonsingular(q)
    try:
        k = hyperbolic_coefficient(q)
    except NotNormalizedError:
        k = None
    return to_jsonable(
        {
            "form": form_to_record(q),
            "form_sha256": form_hash(q),
            "nonsingular": nonsingular,
            "determinant": determinant(q),
            "signature": real_signature(q),
            "norm_bound": form_norm(q),
            "hyperbolic_coefficient": k,
        }
    )
