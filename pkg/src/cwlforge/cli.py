"""Command-line runner for a single CommandLineTool.

usage: cwlforge <config.yml> <tool.cwl> [inputs.yml] [--<input-id>=<value> ...]

On success the output object is printed as JSON on stdout and output files are
copied into the current directory. Exit codes: 0 ok, 2 usage, 3 parse or
document error, 4 validation expression failed, 5 execution failed.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import sys
from typing import Optional

import yaml

from cwlforge.binding import describe_file
from cwlforge.config import load_config
from cwlforge.document import ToolDocument
from cwlforge.engine import Engine
from cwlforge.errors import (
    CwlForgeError,
    DocumentError,
    ExpressionError,
    InputError,
    InvalidValue,
    NotAMapping,
    TaskFailed,
    ValidationFailed,
    YamlSyntax,
)
from cwlforge.toolapp import load_tool

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_VALIDATION, EXIT_EXECUTION = 0, 2, 3, 4, 5
USAGE = "usage: cwlforge <config.yml> <tool.cwl> [inputs.yml] [--<input-id>=<value> ...]"

log = logging.getLogger("cwlforge")


class UsageError(Exception):
    pass


def parse_job_inputs(source_text: str, doc: Optional[ToolDocument] = None) -> dict:
    """Read a job file: a mapping of input id to a scalar or ``{class: File, path: ...}``."""
    try:
        data = yaml.safe_load(source_text)
    except yaml.YAMLError as exc:
        raise YamlSyntax(f"malformed job file: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise NotAMapping("job inputs must be a mapping of input id to value")
    out = {}
    for key, value in data.items():
        if isinstance(value, dict) and value.get("class") == "File":
            value = value.get("path") or value.get("location")
            if isinstance(value, str) and value.startswith("file://"):
                value = value[len("file://") :]
        out[str(key)] = value
    return out


def coerce_flag(doc: ToolDocument, key: str, text: str):
    """Convert a ``--key=value`` string according to the declared input type."""
    try:
        param = doc.input(key)
    except KeyError:
        raise UsageError(f"unknown input flag '--{key}'") from None
    t = param.value_type
    if t == "boolean":
        if text.lower() in ("true", "false"):
            return text.lower() == "true"
        raise UsageError(f"--{key} expects true or false, got '{text}'")
    if t in ("int", "long"):
        try:
            return int(text, 10)
        except ValueError:
            raise UsageError(f"--{key} expects an integer, got '{text}'") from None
    if t in ("float", "double"):
        try:
            return float(text)
        except ValueError:
            raise UsageError(f"--{key} expects a number, got '{text}'") from None
    return text


def split_args(argv: list) -> tuple:
    positional, flags = [], []
    for a in argv:
        if a.startswith("--"):
            if "=" not in a:
                raise UsageError(f"flag '{a}' must be written as --<input-id>=<value>")
            key, value = a[2:].split("=", 1)
            if not key:
                raise UsageError(f"malformed flag '{a}'")
            flags.append((key, value))
        else:
            positional.append(a)
    if not 2 <= len(positional) <= 3:
        raise UsageError("expected a config file, a tool file and optionally an inputs file")
    return positional, flags


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def collect_outputs(outputs: dict, outdir: str) -> dict:
    """Copy each output file into ``outdir`` and describe the copies."""
    result = {}
    for output_id, f in outputs.items():
        dest = os.path.abspath(os.path.join(outdir, os.path.basename(f.path)))
        shutil.copyfile(f.path, dest)
        result[output_id] = describe_file(dest).to_cwl()
    return result


def run(argv: list) -> int:
    if any(a in ("-h", "--help") for a in argv):
        print(USAGE)
        return EXIT_OK
    try:
        positional, flags = split_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "UsageError", f"{exc}\n{USAGE}")
    config_path, tool_path = positional[:2]
    inputs_path = positional[2] if len(positional) == 3 else None

    try:
        config = load_config(config_path)
    except OSError as exc:
        return _fail(EXIT_PARSE, "IoError", f"{config_path}: {exc.strerror or exc}")
    except (YamlSyntax, InvalidValue) as exc:
        return _fail(EXIT_PARSE, type(exc).__name__, f"{config_path}: {exc}")

    engine = Engine(config)
    try:
        try:
            app = load_tool(tool_path, engine)
        except (DocumentError, ExpressionError) as exc:
            return _fail(EXIT_PARSE, type(exc).__name__, str(exc))
        doc = app.doc

        raw: dict = {}
        base_dir = None
        if inputs_path is not None:
            try:
                with open(inputs_path, encoding="utf-8") as fh:
                    raw = parse_job_inputs(fh.read(), doc)
            except OSError as exc:
                return _fail(EXIT_PARSE, "IoError", f"{inputs_path}: {exc.strerror or exc}")
            except (YamlSyntax, NotAMapping) as exc:
                return _fail(EXIT_PARSE, type(exc).__name__, f"{inputs_path}: {exc}")
            base_dir = os.path.dirname(os.path.abspath(inputs_path))
            file_ids = {p.id for p in doc.inputs if p.value_type == "File"}
            for key, value in raw.items():
                if key in file_ids and isinstance(value, str) and not os.path.isabs(value):
                    raw[key] = os.path.join(base_dir, value)
        try:
            for key, text in flags:
                raw[key] = coerce_flag(doc, key, text)
        except UsageError as exc:
            return _fail(EXIT_USAGE, "UsageError", str(exc))

        try:
            handle = app.invoke(raw)
        except InputError as exc:
            return _fail(EXIT_USAGE, type(exc).__name__, str(exc))
        except ValidationFailed as exc:
            return _fail(EXIT_VALIDATION, "ValidationFailed", str(exc))
        except ExpressionError as exc:
            return _fail(EXIT_VALIDATION, type(exc).__name__, str(exc))

        try:
            outputs = handle.result()
        except TaskFailed as exc:
            return _fail(EXIT_EXECUTION, exc.failure.kind, str(exc.failure))
        result = collect_outputs(outputs, os.getcwd())
        print(json.dumps(result, indent=2))
        return EXIT_OK
    except CwlForgeError as exc:
        return _fail(EXIT_EXECUTION, type(exc).__name__, str(exc))
    finally:
        engine.shutdown(drain=True)


def main(argv: Optional[list] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return run(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
