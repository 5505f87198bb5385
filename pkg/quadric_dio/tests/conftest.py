import math
from fractions import Fraction
from pathlib import Path
from typing import List

import pytest
import sympy

from quadric_dio.config import AppConfig
from quadric_dio.forms.loader import builtin_form
from quadric_dio.forms.qform import QuadForm
from quadric_dio.services import ServiceContext, create_service_context
from quadric_dio.utils.rationals import QuadraticSurd

FORMS_DIR = Path(__file__).resolve().parents[2] / "configs" / "forms"


@pytest.fixture
def conic() -> QuadForm:
    return builtin_form("conic")


@pytest.fixture
def q0() -> QuadForm:
    return builtin_form("q0")


@pytest.fixture
def sphere() -> QuadForm:
    return builtin_form("sphere")


@pytest.fixture
def sphere_normalized() -> QuadForm:
    return builtin_form("sphere_normalized")


@pytest.fixture
def q5() -> QuadForm:
    return builtin_form("q5")


@pytest.fixture
def anisotropic3() -> QuadForm:
    return builtin_form("anisotropic3")


@pytest.fixture
def context(monkeypatch) -> ServiceContext:
    for name in ("THREADS", "STRATEGY", "SLICE_ROWS", "WITNESS_BOUND", "MC_CHUNK", "SEED"):
        monkeypatch.delenv(f"QUADRIC_DIO_{name}", raising=False)
    return create_service_context(AppConfig())


@pytest.fixture(scope="session")
def quadratic_irrationals() -> List[QuadraticSurd]:
    """√D 的小数部分（大于 1/2 时取 1 − 它），D 取前 50 个无平方因子数，全部落在 (0, 1/2)。"""
    values: List[QuadraticSurd] = []
    n = 2
    while len(values) < 50:
        if max(sympy.factorint(n).values()) == 1:
            alpha = QuadraticSurd(-math.isqrt(n), 1, n)
            values.append(alpha if alpha < Fraction(1, 2) else 1 - alpha)
        n += 1
    return values
