"""Desk-scale benchmarks: pipeline fan-out, expression evaluation, raw task throughput.

Results are appended to CSV files under ``<out>/<run-id>/``:

    pipeline.csv    run_id,scenario,n_items,workers,makespan_s,status
    expr.csv        run_id,scenario,n_words,mean_eval_us,status
    throughput.csv  run_id,scenario,n_tasks,workers,tasks_per_s,status

``status`` is ``ok`` when every output matched its expected checksum.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import os
import random
import shutil
import statistics
import tempfile
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from cwlforge import CORPUS
from cwlforge.config import RunnerConfig, default_config
from cwlforge.document import load_tool_file
from cwlforge.engine import Engine, wait
from cwlforge.errors import TaskFailed
from cwlforge.expr import detect_template, evaluate_template, parse_expression_lib, resolve_references
from cwlforge.toolapp import load_tool

PIPELINE_SIZE = 1024
PIPELINE_RADIUS = 1
EXPR_SWEEP = tuple(2**k for k in range(1, 11))

CSV_FIELDS = {
    "pipeline": ("run_id", "scenario", "n_items", "workers", "makespan_s", "status"),
    "expr": ("run_id", "scenario", "n_words", "mean_eval_us", "status"),
    "throughput": ("run_id", "scenario", "n_tasks", "workers", "tasks_per_s", "status"),
}


@dataclass
class BenchRecord:
    scenario: str
    table: str
    values: dict
    status: str = "ok"
    details: dict = field(default_factory=dict, repr=False)

    def row(self, run_id: str) -> dict:
        return {"run_id": run_id, "scenario": self.scenario, **self.values, "status": self.status}


def append_rows(out_dir: str, run_id: str, records) -> list:
    """Append records to their CSV tables in ``out_dir/run_id``; returns the files touched."""
    run_dir = os.path.join(out_dir, run_id)
    os.makedirs(run_dir, exist_ok=True)
    touched = []
    for rec in records:
        path = os.path.join(run_dir, f"{rec.table}.csv")
        new = not os.path.exists(path)
        with open(path, "a", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS[rec.table])
            if new:
                w.writeheader()
            w.writerow(rec.row(run_id))
        if path not in touched:
            touched.append(path)
    return touched


# -- pipeline --------------------------------------------------------------


def synthetic_image(index: int, n_lines: int = 24) -> bytes:
    """Deterministic lowercase text standing in for image ``index``."""
    rng = random.Random(index)
    lines = []
    for _ in range(n_lines):
        width = rng.randint(10, 70)
        lines.append("".join(rng.choice("abcdefghijklmnopqrstuvwxyz   ") for _ in range(width)))
    return ("\n".join(lines) + "\n").encode("ascii")


def reference_pipeline(data: bytes, size: int, sepia: bool, radius: int) -> bytes:
    """What resize -> filter -> blur stand-ins produce for ``data``."""
    data = data[:size]
    if sepia:
        data = data.upper()
    width = radius + 8
    out = []
    for line in data.split(b"\n")[:-1] if data.endswith(b"\n") else data.split(b"\n"):
        chunks = [line[i : i + width] for i in range(0, len(line), width)] or [b""]
        out.append(b"\n".join(chunks))
    text = b"\n".join(out)
    return text + b"\n" if data.endswith(b"\n") else text


def run_pipeline_bench(
    n_items: int,
    workers: int,
    config: Optional[RunnerConfig] = None,
    stage_delay: float = 0.1,
    sepia: bool = True,
) -> BenchRecord:
    """Run resize -> filter -> blur over ``n_items`` synthetic inputs via fan-out."""
    if n_items < 1:
        raise ValueError("n_items must be >= 1")
    base = config or default_config()
    config = dataclasses.replace(base, workers=workers)
    scratch = tempfile.mkdtemp(prefix="cwlforge-bench-")
    inputs = []
    for i in range(n_items):
        path = os.path.join(scratch, f"img{i:04d}.png")
        with open(path, "wb") as fh:
            fh.write(synthetic_image(i))
        inputs.append(path)

    status = "ok"
    stages = {"resize": [], "filter": [], "blur": []}
    with Engine(config) as engine:
        resize = load_tool(CORPUS / "resize_image.cwl", engine)
        filt = load_tool(CORPUS / "filter_image.cwl", engine)
        blur = load_tool(CORPUS / "blur_image.cwl", engine)
        t0 = time.monotonic()
        finals = []
        for img in inputs:
            h1 = resize(input_image=img, size=PIPELINE_SIZE, delay=stage_delay)
            h2 = filt(input_image=h1.outputs[0], sepia=sepia, delay=stage_delay)
            h3 = blur(input_image=h2.outputs[0], radius=PIPELINE_RADIUS, delay=stage_delay)
            stages["resize"].append(h1)
            stages["filter"].append(h2)
            stages["blur"].append(h3)
            finals.append(h3)
        wait(finals, "all")
        makespan = time.monotonic() - t0

        checksums = []
        for i, h in enumerate(finals):
            try:
                out = h.result()["output_image"]
            except TaskFailed:
                status = "failed"
                checksums.append(None)
                continue
            want = hashlib.sha1(reference_pipeline(synthetic_image(i), PIPELINE_SIZE, sepia, PIPELINE_RADIUS))
            checksums.append(out.checksum)
            if out.checksum != want.hexdigest():
                status = "mismatch"
        timings = {
            name: [(h.started_at, h.finished_at, [ff.resolved_at for ff in h.outputs]) for h in hs]
            for name, hs in stages.items()
        }
    shutil.rmtree(scratch, ignore_errors=True)
    return BenchRecord(
        scenario=f"pipeline-{config.executor}",
        table="pipeline",
        values={"n_items": n_items, "workers": workers, "makespan_s": round(makespan, 4)},
        status=status,
        details={
            "makespan": makespan,
            "stage_counts": {k: sum(h.state == "succeeded" for h in v) for k, v in stages.items()},
            "checksums": checksums,
            "timings": timings,
            "stage_delay": stage_delay,
        },
    )


# -- expressions -----------------------------------------------------------


def words_message(n_words: int) -> str:
    rng = random.Random(n_words)
    return " ".join(
        "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(2, 9))) for _ in range(n_words)
    )


def run_expression_bench(n_words: int, repeats: int = 100) -> BenchRecord:
    """Bind and evaluate the capitalize template ``repeats`` times over ``n_words`` words."""
    doc = load_tool_file(str(CORPUS / "capitalize.cwl"))
    program = parse_expression_lib(doc.requirements.inline_expression)
    tpl = detect_template(doc.arguments[0].raw)
    message = words_message(n_words)
    expected = " ".join(w[:1].upper() + w[1:] for w in message.split(" "))
    samples = []
    result = ""
    for _ in range(repeats):
        t = time.perf_counter()
        result = evaluate_template(program, resolve_references(tpl, {"message": message}))
        samples.append(time.perf_counter() - t)
    mean_us = statistics.fmean(samples) * 1e6
    return BenchRecord(
        scenario="expr",
        table="expr",
        values={"n_words": n_words, "mean_eval_us": round(mean_us, 3)},
        status="ok" if result == expected else "mismatch",
        details={"mean_s": mean_us / 1e6, "per_word_s": mean_us / 1e6 / n_words, "output": result},
    )


def run_expression_sweep(sizes=EXPR_SWEEP, repeats: int = 100) -> list:
    return [run_expression_bench(n, repeats) for n in sizes]


# -- throughput ------------------------------------------------------------


def run_throughput_bench(
    n_tasks: int, workers: int, duration: float = 0.0, config: Optional[RunnerConfig] = None
) -> BenchRecord:
    """``n_tasks`` independent tasks: echo when ``duration`` is 0, else sleep(duration)."""
    config = dataclasses.replace(config or default_config(), workers=workers)
    status = "ok"
    with Engine(config) as engine:
        if duration > 0:
            tool = load_tool(CORPUS / "sleep.cwl", engine)
            kwargs = {"seconds": duration}
        else:
            tool = load_tool(CORPUS / "echo.cwl", engine)
            kwargs = {"message": "noop"}
        t0 = time.monotonic()
        handles = [tool(**kwargs) for _ in range(n_tasks)]
        wait(handles, "all")
        elapsed = time.monotonic() - t0
        if any(h.state != "succeeded" for h in handles):
            status = "failed"
    rate = n_tasks / elapsed if elapsed > 0 else float("inf")
    return BenchRecord(
        scenario=f"throughput-{config.executor}",
        table="throughput",
        values={"n_tasks": n_tasks, "workers": workers, "tasks_per_s": round(rate, 3)},
        status=status,
        details={"elapsed": elapsed, "rate": rate},
    )


# -- entry point -----------------------------------------------------------


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="bench-results", help="directory for per-run CSV folders")
    ap.add_argument("--executor", default="thread-pool", choices=("serial", "thread-pool", "worker-pool"))
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 8])
    ap.add_argument("--items", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--delay", type=float, default=0.1, help="seconds each pipeline stage sleeps")
    ap.add_argument("--tasks", type=int, default=64)
    ap.add_argument("--skip", nargs="*", default=[], choices=("pipeline", "expr", "throughput"))
    args = ap.parse_args(argv)

    run_id = f"{time.strftime('%Y%m%d-%H%M%S')}-{uuid.uuid4().hex[:6]}"
    config = RunnerConfig(executor=args.executor, workdir=os.path.join(args.out, run_id, "work"))
    records = []
    if "pipeline" not in args.skip:
        for w in args.workers:
            for n in args.items:
                rec = run_pipeline_bench(n, w, config, stage_delay=args.delay)
                print(f"pipeline n_items={n} workers={w} makespan={rec.values['makespan_s']}s {rec.status}")
                records.append(rec)
    if "expr" not in args.skip:
        for rec in run_expression_sweep():
            print(f"expr n_words={rec.values['n_words']} mean={rec.values['mean_eval_us']}us {rec.status}")
            records.append(rec)
    if "throughput" not in args.skip:
        for w in args.workers:
            rec = run_throughput_bench(args.tasks, w, args.delay, config)
            print(f"throughput n_tasks={args.tasks} workers={w} rate={rec.values['tasks_per_s']}/s {rec.status}")
            records.append(rec)
    for path in append_rows(args.out, run_id, records):
        print(path)
    return 0 if all(r.status == "ok" for r in records) else 1


if __name__ == "__main__":
    raise SystemExit(main())
