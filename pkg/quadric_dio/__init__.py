"""有理二次超曲面上内蕴丢番图逼近的精确计算库与命令行工具。"""

__version__ = "0.1.0"
