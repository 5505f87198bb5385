"""与 CLI 子命令一一对应的 Skill 实现。

这些 Skill 对 ``services`` 层做二次封装：
- 统一解析二次型（内联记录或文件路径）与数值参数；
- 以同一接口同时暴露给 CLI 与 MCP 服务器。
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

from .base import Skill
from ..config import parse_rational, parse_sgrid
from ..errors import FormFileError
from ..forms.loader import form_from_record, load_form
from ..forms.qform import QuadForm
from ..metrics.khintchine import PsiFamily
from ..services import (
    ServiceContext,
    approx_report,
    count_report,
    exponents_report,
    khintchine_report,
    normalize_report,
    orbit_report,
    points_report,
    rank_report,
)

Rational = Union[str, int, Fraction]


def resolve_form(form: Optional[Mapping[str, Any]] = None, form_path: Optional[str] = None) -> QuadForm:
    """内联 ``{dim, upper}`` 记录优先，其次是文件路径（支持 ``builtin:<name>``）。"""
    if form is not None:
        return form_from_record(form)
    if form_path:
        return load_form(form_path)
    raise FormFileError("a form record or --form path is required")


def _rational(value: Optional[Rational], default: Fraction) -> Fraction:
    if value is None:
        return default
    return value if isinstance(value, Fraction) else parse_rational(str(value))


def _grid(value: Union[str, Sequence[Rational], None]) -> List[Fraction]:
    if value is None:
        return [Fraction(2) ** j for j in range(11)]
    if isinstance(value, str):
        return parse_sgrid(value)
    return [_rational(v, Fraction(1)) for v in value]


@dataclass
class _ContextBoundSkill(Skill):
    """带有 ServiceContext 依赖的技能基类。"""

    context: ServiceContext


@dataclass
class RankSkill(_ContextBoundSkill):
    def __init__(self, context: ServiceContext) -> None:
        super().__init__(
            name="rank",
            description="Decide isotropy over Q and compute the rank pair (p_Q, p_R) with a witness vector.",
            context=context,
        )

    def invoke(
        self,
        *,
        form: Optional[Mapping[str, Any]] = None,
        form_path: Optional[str] = None,
        seed: int = 0,
        threads: int = 1,
        **_: Any,
    ) -> Dict[str, Any]:
        return rank_report(self.context, resolve_form(form, form_path), seed=seed, threads=threads)


@dataclass
class NormalizeSkill(_ContextBoundSkill):
    def __init__(self, context: ServiceContext) -> None:
        super().__init__(
            name="normalize",
            description="Normalize a form along a maximal totally isotropic rational subspace (exact M and R).",
            context=context,
        )

    def invoke(
        self,
        *,
        form: Optional[Mapping[str, Any]] = None,
        form_path: Optional[str] = None,
        seed: int = 0,
        threads: int = 1,
        **_: Any,
    ) -> Dict[str, Any]:
        return normalize_report(self.context, resolve_form(form, form_path), seed=seed, threads=threads)


@dataclass
class PointsSkill(_ContextBoundSkill):
    def __init__(self, context: ServiceContext) -> None:
        super().__init__(
            name="points",
            description="List the rational points of height at most tmax on the quadric, canonically ordered.",
            context=context,
        )

    def invoke(
        self,
        *,
        form: Optional[Mapping[str, Any]] = None,
        form_path: Optional[str] = None,
        tmax: int = 64,
        seed: int = 0,
        threads: int = 1,
        **_: Any,
    ) -> Dict[str, Any]:
        return points_report(self.context, resolve_form(form, form_path), tmax, seed=seed, threads=threads)


@dataclass
class CountSkill(_ContextBoundSkill):
    def __init__(self, context: ServiceContext) -> None:
        super().__init__(
            name="count",
            description="Count rational points N(T) on a dyadic grid up to tmax with normalized ratios.",
            context=context,
        )

    def invoke(
        self,
        *,
        form: Optional[Mapping[str, Any]] = None,
        form_path: Optional[str] = None,
        tmax: int = 64,
        seed: int = 0,
        threads: int = 1,
        **_: Any,
    ) -> Dict[str, Any]:
        return count_report(self.context, resolve_form(form, form_path), tmax, seed=seed, threads=threads)


@dataclass
class ExponentsSkill(_ContextBoundSkill):
    def __init__(self, context: ServiceContext) -> None:
        super().__init__(
            name="exponents",
            description="Tabulate the exponent data (k, d, n, m, N, c) with a brute-force check.",
            context=context,
        )

    def invoke(self, *, kmax: int = 10, transfer: bool = False, seed: int = 0, **_: Any) -> Dict[str, Any]:
        return exponents_report(self.context, kmax, transfer=transfer, seed=seed)


@dataclass
class ApproxSkill(_ContextBoundSkill):
    def __init__(self, context: ServiceContext) -> None:
        super().__init__(
            name="approx",
            description="Approximation spectrum, Dirichlet and strong Dirichlet profiles for a target point.",
            context=context,
        )

    def invoke(
        self,
        *,
        form: Optional[Mapping[str, Any]] = None,
        form_path: Optional[str] = None,
        target: Optional[str] = None,
        tmax: int = 64,
        uniformity: int = 0,
        seed: int = 0,
        threads: int = 1,
        **_: Any,
    ) -> Dict[str, Any]:
        q = resolve_form(form, form_path)
        return approx_report(self.context, q, target, tmax, uniformity=uniformity, seed=seed, threads=threads)


@dataclass
class OrbitSkill(_ContextBoundSkill):
    def __init__(self, context: ServiceContext) -> None:
        super().__init__(
            name="orbit",
            description="Diagonal-flow profile rho(s) of the lattice attached to a target, with verdicts.",
            context=context,
        )

    def invoke(
        self,
        *,
        form: Optional[Mapping[str, Any]] = None,
        form_path: Optional[str] = None,
        target: Optional[str] = None,
        hmax: int = 256,
        sgrid: Union[str, Sequence[Rational], None] = None,
        psi_a: Optional[Rational] = None,
        psi_b: Optional[Rational] = None,
        seed: int = 0,
        threads: int = 1,
        **_: Any,
    ) -> Dict[str, Any]:
        q = resolve_form(form, form_path)
        psi = PsiFamily(_rational(psi_a, Fraction(1)), _rational(psi_b, Fraction(1)))
        return orbit_report(self.context, q, target, hmax, _grid(sgrid), psi=psi, seed=seed, threads=threads)


@dataclass
class KhintchineSkill(_ContextBoundSkill):
    def __init__(self, context: ServiceContext) -> None:
        super().__init__(
            name="khintchine",
            description="Series verdicts, covering bound and Monte Carlo limsup measure for psi(q)=q^-a log2(q)^-b.",
            context=context,
        )

    def invoke(
        self,
        *,
        psi_a: Optional[Rational] = None,
        psi_b: Optional[Rational] = None,
        big_n: int = 10,
        samples: int = 100_000,
        seed: int = 0,
        threads: int = 1,
        **_: Any,
    ) -> Dict[str, Any]:
        psi = PsiFamily(_rational(psi_a, Fraction(1)), _rational(psi_b, Fraction(1)))
        return khintchine_report(self.context, psi, big_n, samples, seed=seed, threads=threads)


def build_quadric_skills(context: ServiceContext) -> List[Skill]:
    """基于给定的 ``ServiceContext`` 构建全部子命令技能。"""
    return [
        RankSkill(context),
        NormalizeSkill(context),
        PointsSkill(context),
        CountSkill(context),
        ExponentsSkill(context),
        ApproxSkill(context),
        OrbitSkill(context),
        KhintchineSkill(context),
    ]
