import hashlib
import os
import random
import subprocess

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwlforge.binding import (
    CommandPlan,
    ExpectedOutput,
    FileRef,
    bind_arguments,
    coerce_inputs,
    glob_match,
    list_sandbox,
    resolve_outputs,
)
from cwlforge.document import load_tool_file, parse_tool
from cwlforge.errors import (
    AmbiguousOutput,
    MissingOutput,
    MissingRequiredInput,
    TypeMismatch,
    UnknownInput,
    UnresolvedFuture,
)
from cwlforge.expr import parse_expression_lib
from cwlforge.futures import FileFuture

from docgen import random_tool
from oracles import brute_force_argv, render_group


@pytest.fixture
def echo(corpus):
    return load_tool_file(str(corpus / "echo.cwl"))


def tool(inputs_yaml, extra=""):
    return parse_tool(
        "cwlVersion: v1.2\nclass: CommandLineTool\nbaseCommand: prog\n" f"inputs:\n{inputs_yaml}\noutputs: []\n{extra}"
    )


# -- coercion


def test_default_fills_missing(echo):
    assert coerce_inputs(echo, {}).values == {"message": "Hello World"}


def test_supplied_value(echo):
    assert coerce_inputs(echo, {"message": "Hello, World!"}).values == {"message": "Hello, World!"}


def test_unknown_input(echo):
    with pytest.raises(UnknownInput) as info:
        coerce_inputs(echo, {"bogus": 1})
    assert info.value.input_id == "bogus"


def test_missing_and_mismatch():
    doc = tool("  n: int\n  s: string\n  f: float\n  b: boolean\n  o: string?\n")
    with pytest.raises(MissingRequiredInput):
        coerce_inputs(doc, {"s": "x", "f": 1, "b": True})
    with pytest.raises(TypeMismatch) as info:
        coerce_inputs(doc, {"n": True, "s": "x", "f": 1, "b": True})
    assert (info.value.expected, info.value.got) == ("int", "boolean")
    with pytest.raises(TypeMismatch):
        coerce_inputs(doc, {"n": 1, "s": 3, "f": 1, "b": True})
    got = coerce_inputs(doc, {"n": 2.0, "s": "x", "f": 1, "b": False}).values
    assert got == {"n": 2, "s": "x", "f": 1.0, "b": False, "o": None}
    assert isinstance(got["n"], int) and isinstance(got["f"], float)


def test_file_values(tmp_path):
    doc = tool("  f: File\n")
    fut = FileFuture("t", "o")
    assert coerce_inputs(doc, {"f": fut}).values["f"] == FileRef(None, fut)
    assert coerce_inputs(doc, {"f": "a.txt"}, base_dir=str(tmp_path)).values["f"] == FileRef(str(tmp_path / "a.txt"))
    assert coerce_inputs(doc, {"f": {"class": "File", "path": "/x/y"}}).values["f"] == FileRef("/x/y")


# -- binding


def test_listing1_argv(echo):
    plan = bind_arguments(echo, coerce_inputs(echo, {"message": "Hello, World!"}))
    assert plan.argv == ("echo", "Hello, World!")
    assert plan.stdout_target == "hello.txt"
    assert plan.expected_outputs == (ExpectedOutput("output", "stdout", "hello.txt"),)


def test_positions_and_prefixes():
    doc = tool(
        "  a:\n    type: string\n    inputBinding: {position: 2, prefix: --a}\n"
        "  b:\n    type: string\n    inputBinding: {position: 1, prefix: --b}\n"
    )
    plan = bind_arguments(doc, coerce_inputs(doc, {"a": "x", "b": "y"}))
    assert list(plan.argv) == brute_force_argv(
        ["prog"],
        [],
        [
            {"id": "a", "type": "string", "position": 2, "prefix": "--a", "separate": True, "bound": True},
            {"id": "b", "type": "string", "position": 1, "prefix": "--b", "separate": True, "bound": True},
        ],
        {"a": "x", "b": "y"},
    )
    assert plan.argv == ("prog", "--b", "y", "--a", "x")


def test_boolean_flag():
    doc = tool("  sepia:\n    type: boolean\n    inputBinding: {prefix: --sepia}\n")
    assert bind_arguments(doc, coerce_inputs(doc, {"sepia": False})).argv == ("prog",)
    assert bind_arguments(doc, coerce_inputs(doc, {"sepia": True})).argv == ("prog", "--sepia")


def test_separate_false_and_float():
    doc = tool("  x:\n    type: double\n    inputBinding: {prefix: -x=, separate: false}\n")
    assert bind_arguments(doc, coerce_inputs(doc, {"x": 0.1})).argv == ("prog", "-x=0.1")
    assert bind_arguments(doc, coerce_inputs(doc, {"x": 1e-7})).argv == ("prog", "-x=1e-07")


def test_arguments_before_inputs_at_equal_position():
    doc = tool(
        "  z:\n    type: int\n    inputBinding: {position: 0}\n  a:\n    type: int\n    inputBinding: {position: 0}\n",
        "arguments: [first, second]\n",
    )
    assert bind_arguments(doc, coerce_inputs(doc, {"z": 1, "a": 2})).argv == ("prog", "first", "second", "2", "1")


def test_listing4_argument_template(corpus):
    doc = load_tool_file(str(corpus / "capitalize.cwl"))
    prog = parse_expression_lib(doc.requirements.inline_expression)
    plan = bind_arguments(doc, coerce_inputs(doc, {"message": "hello world"}), prog)
    assert plan.argv == ("echo", "Hello World")


def test_empty_template_result_is_one_empty_token():
    doc = tool(
        "  m: string\n",
        "arguments: ['f\"{$(inputs.m)}\"']\nrequirements: [{class: InlinePythonRequirement, expressionLib: []}]\n",
    )
    assert bind_arguments(doc, coerce_inputs(doc, {"m": ""})).argv == ("prog", "")


def test_generated_stream_names():
    doc = parse_tool(
        "cwlVersion: v1.2\nclass: CommandLineTool\nbaseCommand: x\ninputs: {}\n"
        "outputs: {o: stdout, e: stderr}\n"
    )
    plan = bind_arguments(doc, coerce_inputs(doc, {}), task_id="t7")
    assert (plan.stdout_target, plan.stderr_target) == ("t7.stdout", "t7.stderr")
    assert [o.target for o in plan.expected_outputs] == ["t7.stdout", "t7.stderr"]
    plan = bind_arguments(doc, coerce_inputs(doc, {}), task_id="t7", stdout_name="mine.txt")
    assert plan.stdout_target == "mine.txt"


def test_glob_reference_substitution():
    doc = parse_tool(
        "cwlVersion: v1.2\nclass: CommandLineTool\nbaseCommand: x\ninputs: {name: string, n: int}\n"
        "outputs:\n  o:\n    type: File\n    outputBinding: {glob: '$(inputs.name)_$(inputs.n).out'}\n"
    )
    plan = bind_arguments(doc, coerce_inputs(doc, {"name": "run", "n": 3}))
    assert plan.expected_outputs[0].target == "run_3.out"


def test_file_staging_paths(tmp_path):
    src = tmp_path / "in" / "img.png"
    src.parent.mkdir()
    src.write_text("x")
    doc = tool("  f:\n    type: File\n    inputBinding: {position: 1}\n")
    plan = bind_arguments(doc, coerce_inputs(doc, {"f": str(src)}), staging_dir="/sb/t1")
    assert plan.argv == ("prog", "/sb/t1/img.png")
    assert plan.sandbox_inputs == ((str(src), "/sb/t1/img.png"),)


def test_pending_future_rejected():
    doc = tool("  f:\n    type: File\n    inputBinding: {position: 1}\n")
    with pytest.raises(UnresolvedFuture):
        bind_arguments(doc, coerce_inputs(doc, {"f": FileFuture("t", "o")}))


def test_bind_is_pure(echo):
    inputs = coerce_inputs(echo, {"message": "m"})
    assert bind_arguments(echo, inputs, task_id="t") == bind_arguments(echo, inputs, task_id="t")


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_random_docs_match_oracle(seed):
    rng = random.Random(seed)
    text, base, arguments, inputs, values = random_tool(rng)
    doc = parse_tool(text)
    plan = bind_arguments(doc, coerce_inputs(doc, values))
    assert list(plan.argv) == brute_force_argv(base, arguments, inputs, values)


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_order_and_prefix_adjacency(seed):
    rng = random.Random(seed)
    text, base, _arguments, inputs, values = random_tool(rng)
    doc = parse_tool(text)
    argv = list(bind_arguments(doc, coerce_inputs(doc, values)).argv)
    assert argv[: len(base)] == base
    for p in inputs:
        v = values[p["id"]]
        prefix = p["prefix"]
        # "-x" is shared between inputs; only the per-input prefixes identify one group
        if not p["bound"] or v is None or isinstance(v, bool) or prefix != f"--{p['id']}":
            continue
        rendered = render_group(p["type"], None, True, v)[0]
        if p["separate"]:
            i = argv.index(prefix)
            assert argv[i + 1] == rendered
        else:
            (tok,) = [t for t in argv if t.startswith(prefix)]
            assert tok == prefix + rendered
            if rendered:
                assert len(tok) > len(prefix)


# -- outputs


def test_resolve_stdout_checksum(tmp_path):
    (tmp_path / "hello.txt").write_bytes(b"Hello, World!\n")
    plan = CommandPlan(("echo",), "hello.txt", "e.txt", (ExpectedOutput("output", "stdout", "hello.txt"),))
    out = resolve_outputs(plan, list_sandbox(tmp_path), 0, root=str(tmp_path))
    sha1 = subprocess.run(["sha1sum", str(tmp_path / "hello.txt")], capture_output=True, text=True).stdout.split()[0]
    assert out["output"].path == str(tmp_path / "hello.txt")
    assert out["output"].size == 14
    assert out["output"].checksum == sha1 == hashlib.sha1(b"Hello, World!\n").hexdigest()


def test_missing_output(tmp_path):
    plan = CommandPlan(("x",), "o", "e", (ExpectedOutput("output_image", "file", "resized.png"),))
    with pytest.raises(MissingOutput) as info:
        resolve_outputs(plan, [], 0, root=str(tmp_path))
    assert info.value.output_id == "output_image"


def test_ambiguous_and_ordered(tmp_path):
    for name in ("b.txt", "a.txt", "c.log"):
        (tmp_path / name).write_text(name)
    plan = CommandPlan(("x",), "o", "e", (ExpectedOutput("txt", "file", "*.txt"),))
    with pytest.raises(AmbiguousOutput) as info:
        resolve_outputs(plan, list_sandbox(tmp_path), 0, root=str(tmp_path))
    assert info.value.matches == ["a.txt", "b.txt"]
    plan = CommandPlan(
        ("x",), "o", "e", (ExpectedOutput("log", "file", "?.log"), ExpectedOutput("a", "file", "[a]*"))
    )
    out = resolve_outputs(plan, [str(tmp_path / n) for n in ("c.log", "a.txt")], 0, root=str(tmp_path))
    assert list(out) == ["log", "a"]


def test_no_outputs(tmp_path):
    assert resolve_outputs(CommandPlan(("x",), "o", "e"), ["whatever"], 0, root=str(tmp_path)) == {}


@pytest.mark.parametrize(
    "pattern, path, hit",
    [("*.png", "a.png", True), ("*.png", "sub/a.png", False), ("sub/*.png", "sub/a.png", True), ("a?", "ab", True)],
)
def test_glob_match(pattern, path, hit):
    assert glob_match(pattern, path) is hit
