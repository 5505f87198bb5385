"""Skill 抽象与具体技能实现的统一入口。

每个 CLI 子命令对应一个 Skill，MCP 服务器把同一组 Skill 注册为工具。
"""

from .base import Skill
from .quadric import (
    ApproxSkill,
    CountSkill,
    ExponentsSkill,
    KhintchineSkill,
    NormalizeSkill,
    OrbitSkill,
    PointsSkill,
    RankSkill,
    build_quadric_skills,
    resolve_form,
)

__all__ = [
    "Skill",
    "RankSkill",
    "NormalizeSkill",
    "PointsSkill",
    "CountSkill",
    "ExponentsSkill",
    "ApproxSkill",
    "OrbitSkill",
    "KhintchineSkill",
    "build_quadric_skills",
    "resolve_form",
]
