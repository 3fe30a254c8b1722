"""Thread budget plumbing shared by the replicate loops."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from .errors import ParameterError

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "SIGNREC_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """``threads`` if given, else ``$SIGNREC_THREADS``, else 1; 0 means all cores."""
    if threads is None:
        raw = os.environ.get(ENV_THREADS, "1")
        try:
            threads = int(raw)
        except ValueError:
            raise ParameterError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if threads < 0:
        raise ParameterError("threads must be non-negative")
    return threads or (os.cpu_count() or 1)


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int | None = 1) -> list[R]:
    """Ordered map; results come back in input order whatever the scheduling."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
