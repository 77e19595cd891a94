"""
The MIT License (MIT)

Copyright (c) 2025-present pydiffau developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor, wait
from typing import Any, Callable, Iterable, List, Optional

from ..constants import ALL_COMPLETED

__all__ = ("Executor", "ThreadManager", "resolve_jobs")

_log = logging.getLogger(__name__)


def resolve_jobs(jobs: Optional[int]) -> int:
    """Number of workers for a ``--jobs`` value: ``None`` or ``0`` means one per CPU."""
    if not jobs:
        return os.cpu_count() or 1
    return max(1, int(jobs))


class Executor(ThreadPoolExecutor):
    """A :class:`ThreadPoolExecutor` that remembers the futures it handed out.

    numpy, scipy and torch release the GIL inside their kernels, so threads are enough to spread per-clip and
    per-chunk work over cores.


    .. versionadded:: 0.1.0
    """

    def __init__(self, *args, **kwargs):
        self._session_id = kwargs.pop("session_id")
        self._thread_name = kwargs.pop("thread_name")
        self._futures = []
        self._thread_name += f":session_id={self.session_id}:task_number="
        super().__init__(thread_name_prefix=self._thread_name, *args, **kwargs)

    @property
    def futures(self):
        return self._futures

    @property
    def session_id(self):
        return self._session_id

    def submit(self, fn: Callable, *args: Any, **kwargs: Any):
        future = super().submit(fn, *args, **kwargs)
        self.futures.append(future)
        return future

    def clear_futures(self):
        self.futures.clear()

    def wait_for_futures(
        self,
        *,
        timeout: Optional[int] = None,
        return_when=ALL_COMPLETED,
        purge: bool = True,
    ):
        if not self.futures:
            return None
        result = wait(self.futures, timeout, return_when)
        if purge:
            self.clear_futures()
        return result

    def map_ordered(self, fn: Callable, items: Iterable[Any]) -> List[Any]:
        """Run ``fn`` over ``items`` and return the results in input order, re-raising the first failure."""
        futures = [self.submit(fn, item) for item in items]
        self.wait_for_futures()
        return [future.result() for future in futures]


class ThreadManager:
    """Creates the worker pools used for clip-level and bin-level parallelism.

    .. versionadded:: 0.1.0
    """

    _counter = itertools.count(1)

    def create_new_executor(
        self, *, max_workers: Optional[int] = None, thread_name: str = "pydiffau", session_id: str = None
    ) -> Executor:
        workers = resolve_jobs(max_workers)
        session_id = session_id or self.generate_thread_session()
        _log.debug(f"Creating executor {thread_name!r} ({session_id}) with {workers} workers")
        return Executor(
            workers,
            thread_name=thread_name,
            session_id=session_id,
        )

    def generate_thread_session(self) -> str:
        return f"{os.getpid()}-{next(self._counter)}"
