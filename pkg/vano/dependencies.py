from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, TypeVar, Union

from vano.repositories.run_repository import RunRepository
from vano.settings import settings

T = TypeVar("T")
R = TypeVar("R")


def get_executor() -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=settings.VANO_THREADS, thread_name_prefix="vano")


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Map in submission order; runs inline when only one worker is allowed."""
    if settings.VANO_THREADS == 1:
        return [fn(item) for item in items]
    with get_executor() as pool:
        return list(pool.map(fn, items))


def get_run_repository(run_dir: Union[str, Path]) -> RunRepository:
    return RunRepository(Path(run_dir))
