import hashlib
import json
import os
import subprocess
import sys

import pytest

from cwlforge.cli import main, parse_job_inputs
from cwlforge.document import load_tool_file
from cwlforge.errors import NotAMapping

HELLO = b"Hello, World!\n"


@pytest.fixture
def workspace(tmp_path, tool_dir, monkeypatch):
    (tmp_path / "config.yml").write_text(f"executor: thread-pool\nworkers: 2\nworkdir: {tmp_path / 'work'}\n")
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run_cli(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_inputs_file(workspace, capsys):
    (workspace / "inputs.yml").write_text('message: "Hello, World!"\n')
    code, out, err = run_cli(capsys, "config.yml", "tools/echo.cwl", "inputs.yml")
    assert code == 0, err
    result = json.loads(out)
    assert result == {
        "output": {
            "location": str(workspace / "hello.txt"),
            "size": 14,
            "checksum": "sha1$" + hashlib.sha1(HELLO).hexdigest(),
        }
    }
    assert (workspace / "hello.txt").read_bytes() == HELLO


def test_flag_input(workspace, capsys):
    code, out, _ = run_cli(capsys, "config.yml", "tools/echo.cwl", "--message=Hello")
    assert code == 0
    assert (workspace / "hello.txt").read_text() == "Hello\n"


def test_flags_override_file(workspace, capsys):
    (workspace / "inputs.yml").write_text("message: from-file\n")
    assert run_cli(capsys, "config.yml", "tools/echo.cwl", "inputs.yml", "--message=from-flag")[0] == 0
    assert (workspace / "hello.txt").read_text() == "from-flag\n"


def test_unknown_flag_exit_2(workspace, capsys):
    code, out, err = run_cli(capsys, "config.yml", "tools/echo.cwl", "--message=a", "--bogus=1")
    assert code == 2 and out == ""
    assert "bogus" in json.loads(err)["message"]


@pytest.mark.parametrize("args", [["config.yml"], ["config.yml", "tools/echo.cwl", "--message"], ["a", "b", "c", "d"]])
def test_usage_errors(workspace, capsys, args):
    assert run_cli(capsys, *args)[0] == 2


def test_parse_error_exit_3(workspace, capsys):
    (workspace / "wf.cwl").write_text("cwlVersion: v1.2\nclass: Workflow\n")
    code, _, err = run_cli(capsys, "config.yml", "wf.cwl")
    assert code == 3 and json.loads(err)["error"] == "UnsupportedClass"
    (workspace / "bad.yml").write_text("executor: slurm\n")
    assert run_cli(capsys, "bad.yml", "tools/echo.cwl")[0] == 3


def test_validation_exit_4(workspace, capsys):
    (workspace / "x.txt").write_text("a\n")
    code, out, err = run_cli(capsys, "config.yml", "tools/validate_csv.cwl", "--data_file=x.txt")
    assert code == 4 and out == ""
    assert "Invalid file. Expected '.csv'" in json.loads(err)["message"]
    assert not (workspace / "work").exists() or not any((workspace / "work").iterdir())


def test_execution_failure_exit_5(workspace, capsys):
    (workspace / "fail.cwl").write_text(
        "cwlVersion: v1.2\nclass: CommandLineTool\nbaseCommand: [sh, -c, 'echo boom >&2; exit 7']\ninputs: {}\noutputs: []\n"
    )
    code, _, err = run_cli(capsys, "config.yml", "fail.cwl")
    payload = json.loads(err)
    assert code == 5 and payload["error"] == "NonZeroExit" and "boom" in payload["message"]


def test_file_input_from_job_file(workspace, capsys):
    (workspace / "data").mkdir()
    (workspace / "data" / "t.csv").write_text("1,2\n")
    (workspace / "job.yml").write_text("data_file: {class: File, path: data/t.csv}\n")
    code, out, _ = run_cli(capsys, "config.yml", "tools/validate_csv.cwl", "job.yml")
    assert code == 0
    loc = json.loads(out)["validated_output"]["location"]
    assert open(loc).read() == "1,2\n"


def test_typed_flags(workspace, capsys, tool_dir):
    (workspace / "img.png").write_bytes(b"abcdef")
    code, out, err = run_cli(capsys, "config.yml", "tools/resize_image.cwl", "--input_image=img.png", "--size=3", "--delay=0")
    assert code == 0, err
    assert (workspace / "resized.png").read_bytes() == b"abc"
    assert run_cli(capsys, "config.yml", "tools/filter_image.cwl", "--input_image=img.png", "--sepia=maybe")[0] == 2
    assert run_cli(capsys, "config.yml", "tools/resize_image.cwl", "--input_image=img.png", "--size=x")[0] == 2


def test_parse_job_inputs(corpus):
    doc = load_tool_file(str(corpus / "resize_image.cwl"))
    assert parse_job_inputs("message: hi", doc) == {"message": "hi"}
    assert parse_job_inputs("input_image: {class: File, path: img.png}", doc) == {"input_image": "img.png"}
    assert parse_job_inputs('{"size": 3}', doc) == {"size": 3}
    with pytest.raises(NotAMapping):
        parse_job_inputs("- a\n- b\n", doc)


def test_console_entry_point(workspace):
    env = dict(os.environ)
    proc = subprocess.run(
        [sys.executable, "-m", "cwlforge.cli", "config.yml", "tools/echo.cwl", "--message=Hello, World!"],
        capture_output=True,
        cwd=workspace,
        env=env,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["output"]["size"] == 14
