"""Acceptance criteria. Each test reports one PASS/FAIL line in the terminal summary."""

import contextlib
import hashlib
import json
import os
import random
import subprocess
import sys
import time

import pytest

from cwlforge import CORPUS, Engine, RunnerConfig, load_tool, parse_tool, wait
from cwlforge.bench import PIPELINE_RADIUS, PIPELINE_SIZE, run_expression_bench, run_pipeline_bench, synthetic_image
from cwlforge.binding import bind_arguments, coerce_inputs
from cwlforge.document import load_tool_file
from cwlforge.errors import ValidationFailed
from cwlforge.expr import detect_template, parse_expression_lib, resolve_references
from cwlforge.expr.interp import evaluate_template

from conftest import sandbox_count
from docgen import random_tool
from oracles import brute_force_argv, fold_oracle, title_case_oracle

RESULTS = []
SRC = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")


@contextlib.contextmanager
def criterion(name):
    t0 = time.monotonic()
    try:
        yield
    except BaseException as exc:
        RESULTS.append(f"FAIL  {name} ({time.monotonic() - t0:.2f}s): {type(exc).__name__}: {exc}".splitlines()[0])
        raise
    RESULTS.append(f"PASS  {name} ({time.monotonic() - t0:.2f}s)")


def cli(args, cwd):
    config = os.path.join(cwd, "config.yml")
    if not os.path.exists(config):
        with open(config, "w") as fh:
            fh.write(f"executor: thread-pool\nworkers: 2\nworkdir: {os.path.join(cwd, 'work')}\n")
    args = [config, *args]
    env = dict(os.environ, PYTHONPATH=SRC)
    return subprocess.run(
        [sys.executable, "-m", "cwlforge.cli", *args], cwd=cwd, env=env, capture_output=True, text=True
    )


def pipeline_oracle(i):
    data = synthetic_image(i)[:PIPELINE_SIZE].upper()
    return hashlib.sha1(fold_oracle(data, PIPELINE_RADIUS + 8)).hexdigest()


def test_c1_echo_end_to_end(tmp_path):
    with criterion("C1 echo tool end to end"):
        t0 = time.monotonic()
        proc = cli([str(CORPUS / "echo.cwl"), "--message=Hello, World!"], cwd=tmp_path)
        elapsed = time.monotonic() - t0
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "hello.txt").read_bytes() == b"Hello, World!\n"
        out = json.loads(proc.stdout)["output"]
        assert out["size"] == 14
        assert out["checksum"] == "sha1$" + hashlib.sha1(b"Hello, World!\n").hexdigest()
        assert elapsed < 1.0, f"{elapsed:.2f}s"


def test_c2_binding_matches_oracle():
    with criterion("C2 argv ordering vs brute-force oracle, 500 documents"):
        rng = random.Random(20261016)
        t0 = time.monotonic()
        agree = 0
        for _ in range(500):
            text, base, arguments, inputs, values = random_tool(rng, max_groups=6)
            doc = parse_tool(text)
            plan = bind_arguments(doc, coerce_inputs(doc, values))
            agree += list(plan.argv) == brute_force_argv(base, arguments, inputs, values)
        assert agree == 500, f"{agree}/500 agree"
        assert time.monotonic() - t0 < 10.0


def random_ascii(rng):
    return "".join(chr(rng.randint(0, 127)) for _ in range(rng.randint(0, 40)))


def test_c3_capitalize_expression():
    with criterion("C3 capitalize expression, fixed token and 1000 random messages"):
        doc = load_tool_file(str(CORPUS / "capitalize.cwl"))
        program = parse_expression_lib(doc.requirements.inline_expression)

        def argv_for(message):
            return bind_arguments(doc, coerce_inputs(doc, {"message": message}), program).argv

        assert argv_for("hello world") == ("echo", "Hello World")
        rng = random.Random(7)
        for _ in range(1000):
            msg = random_ascii(rng)
            argv = argv_for(msg)
            assert argv == ("echo", title_case_oracle(msg)), repr(msg)


def test_c4_validation_before_spawn(tmp_path, make_engine):
    with criterion("C4 validate rejects wrong extension before spawning"):
        engine = make_engine()
        app = load_tool(CORPUS / "validate_csv.cwl", engine)
        good = tmp_path / "data.csv"
        good.write_text("a,b\n1,2\n")
        bad = tmp_path / "data.txt"
        bad.write_text("a,b\n")

        out = app(data_file=str(good)).result(timeout=10)["validated_output"]
        assert open(out.path).read() == "a,b\n1,2\n"

        before = sandbox_count(engine.config.workdir)
        with pytest.raises(ValidationFailed) as info:
            app(data_file=str(bad))
        assert "Invalid file. Expected '.csv'" in str(info.value)
        assert sandbox_count(engine.config.workdir) == before

        proc = cli([str(CORPUS / "validate_csv.cwl"), f"--data_file={bad}"], cwd=tmp_path)
        assert proc.returncode == 4, proc.stderr
        assert "Invalid file. Expected '.csv'" in proc.stderr


def test_c5_pipeline_fan_out(tmp_path):
    with criterion("C5 three-stage pipeline, 8 inputs, 2 workers"):
        cfg = RunnerConfig(executor="thread-pool", workdir=str(tmp_path / "work"))
        t0 = time.monotonic()
        rec = run_pipeline_bench(8, 2, cfg, stage_delay=0.1)
        assert time.monotonic() - t0 < 30.0
        assert rec.details["checksums"] == [pipeline_oracle(i) for i in range(8)]

        timings = rec.details["timings"]
        resize, filt, blur = timings["resize"], timings["filter"], timings["blur"]
        # some item starts stage 1 before a different item finishes stage 3
        assert any(
            resize[j][0] < blur[i][1] for i in range(8) for j in range(8) if i != j
        ), "no interleaving across items"
        # no consumer starts before the future it reads from resolves
        for upstream, downstream in ((resize, filt), (filt, blur)):
            for (_, _, resolved), (started, _, _) in zip(upstream, downstream):
                assert started >= resolved[0]


def test_c6_makespan_shape(tmp_path):
    with criterion("C6 makespan linear in items, speedup with workers"):
        cfg = RunnerConfig(executor="thread-pool", workdir=str(tmp_path / "work"))
        spans = [run_pipeline_bench(n, 4, cfg, stage_delay=0.1).details["makespan"] for n in (8, 16, 32)]
        ratios = [b / a for a, b in zip(spans, spans[1:])]
        assert all(1.5 <= r <= 2.5 for r in ratios), f"doubling ratios {ratios}"
        one = run_pipeline_bench(8, 1, cfg, stage_delay=0.1).details["makespan"]
        eight = run_pipeline_bench(8, 8, cfg, stage_delay=0.1).details["makespan"]
        assert one / eight >= 3.0, f"speedup {one / eight:.2f}"


def test_c7_expression_cost_scaling():
    with criterion("C7 expression cost per word"):
        small = run_expression_bench(2, repeats=200).values["mean_eval_us"] / 2
        big_rec = run_expression_bench(1024, repeats=50)
        big = big_rec.values["mean_eval_us"] / 1024
        assert big <= 3 * small, f"{big:.2f}us/word vs {small:.2f}us/word"
        assert big_rec.values["mean_eval_us"] < 50_000


CORPUS_JOBS = [
    ("echo.cwl", {"message": "Hello, World!"}),
    ("capitalize.cwl", {"message": "all the words"}),
    ("validate_csv.cwl", {"data_file": "@data.csv"}),
    ("resize_image.cwl", {"input_image": "@img.png", "size": 200, "delay": 0}),
    ("filter_image.cwl", {"input_image": "@img.png", "sepia": True, "delay": 0}),
    ("blur_image.cwl", {"input_image": "@img.png", "radius": 3, "delay": 0}),
    ("sleep.cwl", {"seconds": 0}),
]


def run_corpus(executor, tmp_path):
    (tmp_path / "data.csv").write_text("x,y\n1,2\n")
    (tmp_path / "img.png").write_bytes(synthetic_image(3))
    cfg = RunnerConfig(executor=executor, workers=2, workdir=str(tmp_path / f"work-{executor}"))
    results = {}
    with Engine(cfg) as engine:
        handles = {}
        for name, job in CORPUS_JOBS:
            app = load_tool(CORPUS / name, engine)
            job = {k: str(tmp_path / v[1:]) if isinstance(v, str) and v.startswith("@") else v for k, v in job.items()}
            handles[name] = app(**job)
        wait(list(handles.values()), "all", timeout=60)
        for name, h in handles.items():
            outs = h.result()
            results[name] = {k: (v.size, v.checksum) for k, v in outs.items()}
    return results


def test_c8_executor_equivalence(tmp_path):
    with criterion("C8 serial, thread-pool and worker-pool agree"):
        serial = run_corpus("serial", tmp_path)
        assert serial["echo.cwl"]["output"] == (14, hashlib.sha1(b"Hello, World!\n").hexdigest())
        assert run_corpus("thread-pool", tmp_path) == serial
        assert run_corpus("worker-pool", tmp_path) == serial


PIECES = ['"', "'", "{", "}", "{{", "}}", "$(inputs.message)", "$(inputs.other)", ") or (", "\\", 'f"',
          "${", "__cwlref_message", " ", "x", "\n", "\t", "raise Exception('x')", "+", "#", ";", "`", "$(", ")"]


def adversarial(rng):
    return "".join(rng.choice(PIECES) for _ in range(rng.randint(1, 10)))


def test_c9_injection_fuzz():
    with criterion("C9 adversarial input values never alter structure"):
        text = (
            "cwlVersion: v1.2\nclass: CommandLineTool\nrequirements:\n  - class: InlinePythonRequirement\n"
            "    expressionLib:\n      - |\n        def shout(m):\n            return m.upper()\n"
            "baseCommand: echo\ninputs:\n  message: {type: string, inputBinding: {position: 2}}\n"
            "outputs: []\narguments:\n  - 'f\"<{$(inputs.message)}|{shout($(inputs.message))}>\"'\n"
        )
        doc = parse_tool(text)
        program = parse_expression_lib(doc.requirements.inline_expression)
        tpl = detect_template(doc.arguments[0].raw)
        shape = [type(s).__name__ for s in tpl.segments]
        rng = random.Random(99)
        for _ in range(1000):
            s = adversarial(rng)
            bound = resolve_references(tpl, {"message": s})
            assert [type(seg).__name__ for seg in bound.segments] == shape
            assert evaluate_template(program, bound) == f"<{s}|{s.upper()}>"
            argv = bind_arguments(doc, coerce_inputs(doc, {"message": s}), program).argv
            assert argv == ("echo", f"<{s}|{s.upper()}>", s), repr(s)
