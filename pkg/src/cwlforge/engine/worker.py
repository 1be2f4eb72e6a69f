"""Pool worker: reads task frames on stdin, runs them, writes result frames on stdout."""

from __future__ import annotations

import sys

from cwlforge.engine.protocol import ProcessRequest, read_frame, run_process, write_frame
from dataclasses import asdict


def serve(stdin, stdout) -> None:
    while True:
        msg = read_frame(stdin)
        if msg is None or msg.get("op") == "exit":
            return
        req = ProcessRequest(**msg)
        write_frame(stdout, asdict(run_process(req)))


def main() -> None:
    serve(sys.stdin.buffer, sys.stdout.buffer)


if __name__ == "__main__":
    main()
