import concurrent.futures
import hashlib
from typing import Callable, Iterable, List, Optional, TypeVar

from django.conf import settings

from funcspace.paths import HistoryPath

T = TypeVar('T')
R = TypeVar('R')


def thread_count(threads: Optional[int] = None) -> int:
    return max(1, threads or getattr(settings, 'MINTAU_THREADS', 1))


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """func over items on a thread pool; results keep the input order."""
    items = list(items)
    workers = min(thread_count(threads), max(len(items), 1))
    if workers == 1:
        return [func(item) for item in items]

    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def inputs_digest(*paths: HistoryPath) -> str:
    digest = hashlib.sha256()
    for path in paths:
        digest.update(repr(path.shape_key).encode())
        digest.update(path.samples.tobytes())
    return digest.hexdigest()[:12]
