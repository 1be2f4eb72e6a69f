"""Task execution: sandboxes, executors and the dataflow engine."""

from cwlforge.engine.core import (
    FAILED,
    PENDING,
    RUNNING,
    SUCCEEDED,
    Engine,
    Failure,
    Sandbox,
    TaskHandle,
    TaskSpec,
    WaitResult,
    wait,
)
from cwlforge.engine.executors import (
    Executor,
    SerialExecutor,
    ThreadPoolExecutor,
    WorkerPoolExecutor,
    make_executor,
)
from cwlforge.engine.protocol import ProcessRequest, ProcessResult, run_process
from cwlforge.futures import FileFuture

__all__ = [
    "FAILED",
    "PENDING",
    "RUNNING",
    "SUCCEEDED",
    "Engine",
    "Executor",
    "Failure",
    "FileFuture",
    "ProcessRequest",
    "ProcessResult",
    "Sandbox",
    "SerialExecutor",
    "TaskHandle",
    "TaskSpec",
    "ThreadPoolExecutor",
    "WaitResult",
    "WorkerPoolExecutor",
    "make_executor",
    "run_process",
    "wait",
]
