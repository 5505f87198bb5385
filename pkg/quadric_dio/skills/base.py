"""通用 Skill 抽象：CLI 子命令与 MCP 工具共用同一组能力。"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict


@dataclass
class Skill(ABC):
    """所有具体技能的共同接口。

    设计要点：
    - ``name`` 与 CLI 子命令同名，也是 MCP 工具名；
    - ``description`` 写进工具列表；
    - ``invoke`` 只接受关键字参数，返回 JSON 友好的报告字典。
    """

    name: str
    description: str

    @abstractmethod
    def invoke(self, **kwargs: Any) -> Dict[str, Any]:  # pragma: no cover - 接口定义
        """执行技能主体逻辑。"""

    def to_descriptor(self) -> Dict[str, Any]:
        """返回技能的元数据描述。"""
        return {
            "name": self.name,
            "description": self.description,
        }
