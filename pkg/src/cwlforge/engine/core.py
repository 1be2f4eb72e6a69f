"""Dataflow engine: tasks wait on FileFutures, run in private sandboxes, publish outputs."""

from __future__ import annotations

import concurrent.futures
import itertools
import logging
import os
import shutil
import stat
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

from cwlforge.binding import CommandPlan, list_sandbox, resolve_outputs
from cwlforge.config import RunnerConfig, default_config
from cwlforge.engine.executors import Executor, make_executor
from cwlforge.engine.protocol import ProcessRequest, ProcessResult, environment
from cwlforge.errors import EngineShutDown, StagingError, TaskFailed, UnknownDependency
from cwlforge.futures import FileFuture

log = logging.getLogger(__name__)

PENDING, RUNNING, SUCCEEDED, FAILED = "pending", "running", "succeeded", "failed"


@dataclass(frozen=True)
class Failure:
    """Why a task failed. ``kind`` is one of FAILURE_KINDS."""

    kind: str
    message: str
    exit_code: Optional[int] = None
    stderr_tail: str = ""
    cause: Optional[BaseException] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        text = f"{self.kind}: {self.message}"
        if self.exit_code is not None:
            text += f" (exit code {self.exit_code})"
        if self.stderr_tail:
            text += f"\n{self.stderr_tail.rstrip()}"
        return text


FAILURE_KINDS = (
    "NonZeroExit",
    "SpawnError",
    "StagingError",
    "PlanError",
    "OutputError",
    "DependencyFailed",
    "Cancelled",
    "EngineError",
)


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    plan_factory: Callable[[str], CommandPlan]  # called with the sandbox root once dependencies resolve
    dependencies: tuple = ()  # FileFutures
    output_ids: tuple = ()
    env_policy: str = "inherit"


@dataclass
class Sandbox:
    root: str
    staged_files: dict = field(default_factory=dict)

    @classmethod
    def create(cls, root: str) -> "Sandbox":
        os.makedirs(root)  # must not exist yet: one sandbox per task
        return cls(root)

    def stage(self, source: str, dest: str) -> None:
        try:
            shutil.copyfile(source, dest)
            os.chmod(dest, stat.S_IRUSR | stat.S_IRGRP | stat.S_IROTH)
        except OSError as exc:
            raise StagingError(f"cannot stage '{source}': {exc}") from exc
        self.staged_files[source] = dest


class TaskHandle:
    """Tracks one submitted task. ``outputs`` lists FileFutures in declaration order."""

    def __init__(self, task_id: str, output_ids):
        self.task_id = task_id
        self.outputs = [FileFuture(task_id, o) for o in output_ids]
        self.sandbox: Optional[Sandbox] = None
        self.plan: Optional[CommandPlan] = None
        self.submitted_at = time.monotonic()
        self.started_at: Optional[float] = None
        self.finished_at: Optional[float] = None
        self._state = PENDING
        self._lock = threading.Lock()
        self._done: concurrent.futures.Future = concurrent.futures.Future()
        self._output_object: Optional[dict] = None
        self._error: Optional[Failure] = None

    def __repr__(self) -> str:
        return f"<TaskHandle {self.task_id} {self._state}>"

    @property
    def state(self) -> str:
        return self._state

    @property
    def error(self) -> Optional[Failure]:
        return self._error

    @property
    def output_object(self) -> Optional[dict]:
        return self._output_object

    def done(self) -> bool:
        return self._done.done()

    def result(self, timeout: Optional[float] = None) -> dict:
        """Block until the task finishes; return its output object or raise TaskFailed."""
        return self._done.result(timeout)

    def add_done_callback(self, fn) -> None:
        self._done.add_done_callback(lambda _f: fn(self))

    # transitions, engine side

    def _mark_running(self) -> bool:
        with self._lock:
            if self._state != PENDING:
                return False
            self._state = RUNNING
            self.started_at = time.monotonic()
            return True

    def _finish(self, output_object: Optional[dict] = None, error: Optional[Failure] = None) -> bool:
        with self._lock:
            if self._state in (SUCCEEDED, FAILED):
                return False
            self.finished_at = time.monotonic()
            if error is None:
                self._state = SUCCEEDED
                self._output_object = output_object
            else:
                self._state = FAILED
                self._error = error
        if error is None:
            for ff in self.outputs:
                ff._resolve(output_object[ff.output_id].path)
            self._done.set_result(output_object)
        else:
            exc = TaskFailed(error)
            for ff in self.outputs:
                ff._fail(exc)
            self._done.set_exception(exc)
        return True


class WaitResult(list):
    """List of completed handles; ``timed_out`` is set when the deadline passed first."""

    timed_out = False


def wait(handles, mode: str = "all", timeout: Optional[float] = None) -> WaitResult:
    handles = list(handles)
    by_future = {h._done: h for h in handles}
    when = concurrent.futures.ALL_COMPLETED if mode == "all" else concurrent.futures.FIRST_COMPLETED
    done, not_done = concurrent.futures.wait(list(by_future), timeout=timeout, return_when=when)
    out = WaitResult(h for h in handles if h._done in done)
    out.timed_out = bool(not_done) and (mode == "all" or not done)
    return out


class Engine:
    """Runs TaskSpecs on an executor as their FileFuture dependencies resolve."""

    _run_ids = itertools.count(1)

    def __init__(self, config: Optional[RunnerConfig] = None, executor: Optional[Executor] = None):
        self.config = config or default_config()
        self.executor = executor or make_executor(self.config.executor, self.config.workers)
        self.run_id = f"run-{time.strftime('%Y%m%d-%H%M%S')}-{uuid.uuid4().hex[:6]}"
        self.root = os.path.abspath(os.path.join(self.config.workdir, self.run_id))
        self._lock = threading.RLock()
        self._handles: dict = {}
        self._futures: dict = {}
        self._shutdown = False
        self._task_counter = itertools.count(1)

    def __enter__(self) -> "Engine":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown(drain=True)

    @property
    def step_limit(self) -> int:
        return self.config.step_limit

    def new_task_id(self, stem: str = "task") -> str:
        return f"{stem}-{next(self._task_counter)}"

    def handles(self) -> list:
        with self._lock:
            return list(self._handles.values())

    # submission

    def submit(self, spec: TaskSpec) -> TaskHandle:
        with self._lock:
            if self._shutdown:
                raise EngineShutDown("engine is shut down")
            if spec.task_id in self._handles:
                raise ValueError(f"duplicate task id '{spec.task_id}'")
            for dep in spec.dependencies:
                if self._futures.get(dep.id) is not dep:
                    raise UnknownDependency(f"file future {dep.id} was not produced by this engine")
            handle = TaskHandle(spec.task_id, spec.output_ids)
            self._handles[spec.task_id] = handle
            for ff in handle.outputs:
                self._futures[ff.id] = ff

        deps = list({d.id: d for d in spec.dependencies}.values())
        if not deps:
            self._ready(spec, handle)
            return handle
        remaining = [len(deps)]
        counter_lock = threading.Lock()

        def on_dep(ff: FileFuture) -> None:
            if ff.failed():
                handle._finish(error=Failure("DependencyFailed", f"dependency {ff.producing_task}/{ff.output_id} failed"))
                return
            with counter_lock:
                remaining[0] -= 1
                ready = remaining[0] == 0
            if ready:
                self._ready(spec, handle)

        for d in deps:
            d.add_done_callback(on_dep)
        return handle

    def _ready(self, spec: TaskSpec, handle: TaskHandle) -> None:
        if handle.done():
            return
        if self._shutdown and self._cancelling:
            handle._finish(error=Failure("Cancelled", "engine shut down before the task ran"))
            return
        root = os.path.join(self.root, spec.task_id)
        try:
            plan = spec.plan_factory(root)
        except Exception as exc:
            handle._finish(error=Failure("PlanError", str(exc), cause=exc))
            return
        handle.plan = plan
        if handle.done():
            return
        try:
            sandbox = Sandbox.create(root)
            handle.sandbox = sandbox
            for src, dest in plan.sandbox_inputs:
                sandbox.stage(src, dest)
        except (OSError, StagingError) as exc:
            handle._finish(error=Failure("StagingError", str(exc), cause=exc))
            return
        request = ProcessRequest(
            task_id=spec.task_id,
            argv=list(plan.argv),
            cwd=root,
            stdout=plan.stdout_target,
            stderr=plan.stderr_target,
            env=environment(spec.env_policy),
        )
        try:
            fut = self.executor.submit_runnable(request, on_start=handle._mark_running)
        except RuntimeError as exc:
            handle._finish(error=Failure("Cancelled", str(exc), cause=exc))
            return
        fut.add_done_callback(lambda f: self._completed(handle, f))

    def _completed(self, handle: TaskHandle, fut: concurrent.futures.Future) -> None:
        if fut.cancelled():
            handle._finish(error=Failure("Cancelled", "cancelled before it started"))
            return
        exc = fut.exception()
        if exc is not None:
            handle._finish(error=Failure("EngineError", str(exc), cause=exc))
            return
        result: ProcessResult = fut.result()
        if result.error is not None:
            kind = "SpawnError" if result.spawn_failed else "EngineError"
            handle._finish(error=Failure(kind, result.error.get("message", "")))
            return
        if result.exit_code != 0:
            handle._finish(
                error=Failure("NonZeroExit", f"command exited with {result.exit_code}", result.exit_code, result.stderr_tail)
            )
            return
        sandbox = handle.sandbox
        staged = set(os.path.relpath(p, sandbox.root).replace(os.sep, "/") for p in sandbox.staged_files.values())
        listing = [p for p in list_sandbox(sandbox.root) if p not in staged]
        try:
            outputs = resolve_outputs(handle.plan, listing, result.exit_code, root=sandbox.root)
        except Exception as exc:
            handle._finish(error=Failure("OutputError", str(exc), 0, cause=exc))
            return
        handle._finish(output_object=outputs)

    # shutdown

    _cancelling = False

    def shutdown(self, drain: bool = True) -> None:
        """Stop accepting work. drain=False cancels tasks that have not started."""
        with self._lock:
            if self._shutdown:
                return
            self._shutdown = True
            self._cancelling = not drain
            handles = list(self._handles.values())
        if drain:
            wait(handles, "all")
            self.executor.shutdown(drain=True)
        else:
            for h in handles:
                if h.state == PENDING and h.plan is None:
                    h._finish(error=Failure("Cancelled", "engine shut down before the task ran"))
            self.executor.shutdown(drain=False)
            wait(handles, "all")
        if self.config.cleanup:
            for h in handles:
                if h.state == SUCCEEDED and h.sandbox is not None:
                    shutil.rmtree(h.sandbox.root, ignore_errors=True)
            try:
                os.rmdir(self.root)
            except OSError:
                pass
