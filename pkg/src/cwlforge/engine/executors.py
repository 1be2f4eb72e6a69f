"""Executors run ProcessRequests and report ProcessResults through futures.

All three share one interface: ``submit_runnable(request, on_start)`` returns a
``concurrent.futures.Future`` and ``shutdown(drain)`` stops the executor.
``on_start`` is called just before the process is launched.
"""

from __future__ import annotations

import concurrent.futures
import logging
import os
import queue
import subprocess
import sys
import threading
from typing import Callable, Optional

from cwlforge.engine.protocol import (
    ProcessRequest,
    ProcessResult,
    read_frame,
    request_to_dict,
    result_from_dict,
    run_process,
    write_frame,
)

log = logging.getLogger(__name__)


class Executor:
    name = "base"
    workers = 1

    def submit_runnable(self, request: ProcessRequest, on_start: Optional[Callable] = None) -> concurrent.futures.Future:
        raise NotImplementedError

    def shutdown(self, drain: bool = True) -> None:
        raise NotImplementedError


class SerialExecutor(Executor):
    """Runs each process to completion inside the submitting call."""

    name = "serial"

    def submit_runnable(self, request, on_start=None):
        fut: concurrent.futures.Future = concurrent.futures.Future()
        fut.set_running_or_notify_cancel()
        if on_start:
            on_start()
        try:
            fut.set_result(run_process(request))
        except BaseException as exc:  # surfaced through the future
            fut.set_exception(exc)
        return fut

    def shutdown(self, drain=True):
        pass


class ThreadPoolExecutor(Executor):
    """K threads, each blocking on one child process at a time."""

    name = "thread-pool"

    def __init__(self, workers: int):
        self.workers = workers
        self._pool = concurrent.futures.ThreadPoolExecutor(max_workers=workers, thread_name_prefix="cwlforge")

    def submit_runnable(self, request, on_start=None):
        def run():
            if on_start:
                on_start()
            return run_process(request)

        return self._pool.submit(run)

    def shutdown(self, drain=True):
        self._pool.shutdown(wait=True, cancel_futures=not drain)


def _worker_env() -> dict:
    env = dict(os.environ)
    src = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    env["PYTHONPATH"] = os.pathsep.join(p for p in (src, env.get("PYTHONPATH")) if p)
    return env


class _Worker:
    def __init__(self):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "cwlforge.engine.worker"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            env=_worker_env(),
        )

    def run(self, request: ProcessRequest) -> ProcessResult:
        write_frame(self.proc.stdin, request_to_dict(request))
        msg = read_frame(self.proc.stdout)
        if msg is None:
            raise RuntimeError(f"worker {self.proc.pid} exited unexpectedly")
        return result_from_dict(msg)

    def stop(self) -> None:
        try:
            write_frame(self.proc.stdin, {"op": "exit"})
            self.proc.stdin.close()
        except (BrokenPipeError, ValueError, OSError):
            pass
        try:
            self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
        self.proc.stdout.close()


_STOP = object()


class WorkerPoolExecutor(Executor):
    """K long-lived worker processes fed over pipes with the frame protocol.

    Each worker has a dispatcher thread in this process that takes requests
    from a shared queue, so at most K child processes run at once.
    """

    name = "worker-pool"

    def __init__(self, workers: int):
        self.workers = workers
        self._queue: queue.Queue = queue.Queue()
        self._workers = [_Worker() for _ in range(workers)]
        self._threads = [
            threading.Thread(target=self._dispatch, args=(i,), name=f"cwlforge-wp-{i}", daemon=True)
            for i in range(workers)
        ]
        for t in self._threads:
            t.start()
        self._closed = False

    def _dispatch(self, index: int) -> None:
        while True:
            item = self._queue.get()
            if item is _STOP:
                self._workers[index].stop()
                return
            request, fut, on_start = item
            if not fut.set_running_or_notify_cancel():
                continue
            if on_start:
                on_start()
            try:
                fut.set_result(self._workers[index].run(request))
            except Exception as exc:
                log.warning("worker %d failed: %s; restarting", index, exc)
                fut.set_exception(exc)
                self._workers[index].stop()
                self._workers[index] = _Worker()

    def submit_runnable(self, request, on_start=None):
        if self._closed:
            raise RuntimeError("executor is shut down")
        fut: concurrent.futures.Future = concurrent.futures.Future()
        self._queue.put((request, fut, on_start))
        return fut

    def shutdown(self, drain=True):
        if self._closed:
            return
        self._closed = True
        if not drain:
            while True:
                try:
                    item = self._queue.get_nowait()
                except queue.Empty:
                    break
                if item is not _STOP:
                    item[1].cancel()
        for _ in self._threads:
            self._queue.put(_STOP)
        for t in self._threads:
            t.join()


def make_executor(kind: str, workers: int) -> Executor:
    if kind == "serial":
        return SerialExecutor()
    if kind == "thread-pool":
        return ThreadPoolExecutor(workers)
    if kind == "worker-pool":
        return WorkerPoolExecutor(workers)
    raise ValueError(f"unknown executor '{kind}'")
