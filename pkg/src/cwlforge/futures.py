"""Handle for a file that a submitted task will produce."""

from __future__ import annotations

import concurrent.futures
import itertools
import time
from typing import Optional

_ids = itertools.count(1)


class FileFuture:
    """Resolves to the absolute path of one declared output once its task succeeds.

    Pass it as a File-typed input to another tool to express a dependency.
    """

    def __init__(self, producing_task: str, output_id: str):
        self.id = f"ff-{next(_ids)}"
        self.producing_task = producing_task
        self.output_id = output_id
        self._future: concurrent.futures.Future = concurrent.futures.Future()
        self.resolved_at: Optional[float] = None

    def __repr__(self) -> str:
        state = self.resolved_path or ("failed" if self.failed() else "pending")
        return f"<FileFuture {self.id} {self.producing_task}/{self.output_id} {state}>"

    @property
    def resolved_path(self) -> Optional[str]:
        f = self._future
        if f.done() and f.exception() is None:
            return f.result()
        return None

    def done(self) -> bool:
        return self._future.done()

    def failed(self) -> bool:
        return self._future.done() and self._future.exception() is not None

    def result(self, timeout: Optional[float] = None) -> str:
        """Block until resolved and return the path; re-raises the producer's failure."""
        return self._future.result(timeout)

    def add_done_callback(self, fn) -> None:
        self._future.add_done_callback(lambda _f: fn(self))

    # engine side

    def _resolve(self, path: str) -> None:
        self.resolved_at = time.monotonic()
        self._future.set_result(path)

    def _fail(self, exc: BaseException) -> None:
        self._future.set_exception(exc)
