"""Process records and the length-prefixed wire format used by pool workers.

Frame layout: a 4-byte big-endian unsigned payload length, then that many
bytes of UTF-8 JSON encoding one object.

Task record::

    {"task_id": str, "argv": [str, ...], "cwd": str,
     "stdout": str, "stderr": str, "env": {str: str} | null}

Result record::

    {"task_id": str, "exit_code": int | null, "stderr_tail": str,
     "error": {"kind": "spawn", "message": str} | null}

A task record of ``{"op": "exit"}`` asks the worker to stop.
"""

from __future__ import annotations

import json
import os
import struct
import subprocess
from dataclasses import asdict, dataclass
from typing import BinaryIO, Optional

STDERR_TAIL_BYTES = 4096
_HEADER = struct.Struct(">I")
ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL", "TMPDIR", "USER", "TZ")


@dataclass(frozen=True)
class ProcessRequest:
    task_id: str
    argv: list
    cwd: str
    stdout: str
    stderr: str
    env: Optional[dict] = None


@dataclass(frozen=True)
class ProcessResult:
    task_id: str
    exit_code: Optional[int]
    stderr_tail: str = ""
    error: Optional[dict] = None

    @property
    def spawn_failed(self) -> bool:
        return self.error is not None and self.error.get("kind") == "spawn"


def environment(policy: str) -> Optional[dict]:
    """None means inherit the parent environment."""
    if policy == "inherit":
        return None
    return {k: os.environ[k] for k in ENV_ALLOWLIST if k in os.environ}


def encode_frame(obj: dict) -> bytes:
    payload = json.dumps(obj, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(len(payload)) + payload


def _read_exact(stream: BinaryIO, n: int) -> Optional[bytes]:
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def read_frame(stream: BinaryIO) -> Optional[dict]:
    """Next decoded frame, or None at a clean end of stream."""
    header = _read_exact(stream, _HEADER.size)
    if header is None:
        return None
    (length,) = _HEADER.unpack(header)
    payload = _read_exact(stream, length)
    if payload is None:
        raise EOFError("truncated frame")
    return json.loads(payload.decode("utf-8"))


def write_frame(stream: BinaryIO, obj: dict) -> None:
    stream.write(encode_frame(obj))
    stream.flush()


def request_to_dict(req: ProcessRequest) -> dict:
    return asdict(req)


def result_from_dict(d: dict) -> ProcessResult:
    return ProcessResult(d["task_id"], d.get("exit_code"), d.get("stderr_tail", ""), d.get("error"))


def _tail(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            fh.seek(0, os.SEEK_END)
            size = fh.tell()
            fh.seek(max(0, size - STDERR_TAIL_BYTES))
            return fh.read().decode("utf-8", errors="replace")
    except OSError:
        return ""


def run_process(req: ProcessRequest) -> ProcessResult:
    """Spawn ``req.argv`` in ``req.cwd`` with stdout/stderr redirected to files there."""
    out_path = os.path.join(req.cwd, req.stdout)
    err_path = os.path.join(req.cwd, req.stderr)
    try:
        with open(out_path, "wb") as out, open(err_path, "wb") as err:
            try:
                proc = subprocess.Popen(
                    list(req.argv), cwd=req.cwd, stdin=subprocess.DEVNULL, stdout=out, stderr=err, env=req.env
                )
            except OSError as exc:
                return ProcessResult(req.task_id, None, "", {"kind": "spawn", "message": str(exc)})
            code = proc.wait()
    except OSError as exc:
        return ProcessResult(req.task_id, None, "", {"kind": "io", "message": str(exc)})
    return ProcessResult(req.task_id, code, _tail(err_path) if code != 0 else "")
