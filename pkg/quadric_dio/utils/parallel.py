"""线程池扇出，结果按提交顺序合并，保证输出与线程数无关。"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    功能说明:
        对 ``items`` 逐个调用 ``fn``；threads > 1 时在线程池中执行。
    参数:
        fn (Callable): 纯函数，不依赖执行顺序。
        items (Iterable): 任务输入。
        threads (int): 工作线程数。
    返回:
        List: 与输入顺序一致的结果列表。
    """
    work = list(items)
    if threads <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    logger.debug("ordered_map tasks=%s threads=%s", len(work), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, item) for item in work]
        return [future.result() for future in futures]


def chunked(values: Sequence[T], size: int) -> List[Sequence[T]]:
    """把序列切成长度不超过 ``size`` 的连续块。"""
    size = max(size, 1)
    return [values[i : i + size] for i in range(0, len(values), size)]
