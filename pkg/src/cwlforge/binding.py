"""Input coercion, command-line rendering and output collection."""

from __future__ import annotations

import fnmatch
import hashlib
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from cwlforge.document import ToolDocument
from cwlforge.errors import (
    AmbiguousOutput,
    MissingOutput,
    MissingRequiredInput,
    TypeMismatch,
    UnknownInput,
    UnresolvedFuture,
)
from cwlforge.expr import (
    DEFAULT_STEP_LIMIT,
    detect_template,
    evaluate_template,
    references_in,
    resolve_references,
    stringify,
)
from cwlforge.futures import FileFuture


@dataclass(frozen=True)
class FileRef:
    """A File-typed input value. ``pending`` holds the FileFuture until it resolves."""

    path: Optional[str]
    pending: Optional[FileFuture] = None

    def finalized(self) -> "FileRef":
        if self.pending is None:
            return self
        path = self.pending.resolved_path
        if path is None:
            raise UnresolvedFuture(self.pending.output_id)
        return FileRef(path)


@dataclass(frozen=True)
class InputSet:
    """Coerced inputs for one invocation. Absent optional inputs map to None."""

    values: dict
    tool_ref: ToolDocument = field(repr=False, compare=False)

    def __getitem__(self, key: str):
        return self.values[key]

    def pending(self) -> dict:
        return {k: v.pending for k, v in self.values.items() if isinstance(v, FileRef) and v.pending is not None}

    def finalized(self) -> "InputSet":
        values = {}
        for k, v in self.values.items():
            if isinstance(v, FileRef) and v.pending is not None:
                if v.pending.resolved_path is None:
                    raise UnresolvedFuture(k)
                v = FileRef(v.pending.resolved_path)
            values[k] = v
        return InputSet(values, self.tool_ref)

    def with_values(self, updates: Mapping) -> "InputSet":
        return InputSet({**self.values, **updates}, self.tool_ref)


@dataclass(frozen=True)
class ExpectedOutput:
    id: str
    kind: str
    target: str  # filename for stdout/stderr, resolved glob for file outputs


@dataclass(frozen=True)
class CommandPlan:
    argv: tuple
    stdout_target: str
    stderr_target: str
    expected_outputs: tuple = ()
    sandbox_inputs: tuple = ()  # (source path, staged path) pairs
    workdir: Optional[str] = None


@dataclass(frozen=True)
class OutputFile:
    path: str
    size: int
    checksum: str  # sha1 hex digest

    def to_cwl(self) -> dict:
        return {"location": self.path, "size": self.size, "checksum": f"sha1${self.checksum}"}


# -- coercion --------------------------------------------------------------


def _type_of(v) -> str:
    if isinstance(v, bool):
        return "boolean"
    return type(v).__name__


def _coerce_value(input_id: str, value_type: str, v, base_dir: Optional[str]):
    if value_type == "string":
        if isinstance(v, str):
            return v
    elif value_type in ("int", "long"):
        if isinstance(v, int) and not isinstance(v, bool):
            return v
        if isinstance(v, float) and v.is_integer():
            return int(v)
    elif value_type in ("float", "double"):
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
    elif value_type == "boolean":
        if isinstance(v, bool):
            return v
    elif value_type == "File":
        if isinstance(v, FileFuture):
            return FileRef(None, pending=v)
        if isinstance(v, FileRef):
            return v
        if isinstance(v, dict) and v.get("class") == "File":
            v = v.get("path") or v.get("location")
            if isinstance(v, str) and v.startswith("file://"):
                v = v[len("file://") :]
        if isinstance(v, (str, os.PathLike)):
            p = os.fspath(v)
            if base_dir and not os.path.isabs(p):
                p = os.path.join(base_dir, p)
            return FileRef(os.path.abspath(p))
    raise TypeMismatch(input_id, value_type, _type_of(v))


def coerce_inputs(doc: ToolDocument, raw: Mapping[str, Any], base_dir: Optional[str] = None) -> InputSet:
    """Check ``raw`` against the tool's inputs, filling defaults and coercing types.

    Relative File paths are resolved against ``base_dir`` (default: the cwd).
    """
    declared = {p.id: p for p in doc.inputs}
    for key in raw:
        if key not in declared:
            raise UnknownInput(key)
    values = {}
    for p in doc.inputs:
        v = raw.get(p.id)
        if v is None:
            v = p.default_value
        if v is None:
            if not p.optional:
                raise MissingRequiredInput(p.id)
            values[p.id] = None
            continue
        values[p.id] = _coerce_value(p.id, p.value_type, v, base_dir)
    return InputSet(values, doc)


# -- rendering -------------------------------------------------------------


def render_value(v) -> str:
    if isinstance(v, FileRef):
        if v.pending is not None:
            raise UnresolvedFuture(v.pending.output_id)
        return v.path
    if isinstance(v, float):
        return repr(v)
    return stringify(v)


def staged_names(doc: ToolDocument, inputs: InputSet) -> dict:
    """Deterministic sandbox filename for every File input, keyed by input id."""
    names = {}
    taken = set()
    for p in doc.inputs:
        v = inputs.values.get(p.id)
        if not isinstance(v, FileRef):
            continue
        path = v.path if v.pending is None else (v.pending.resolved_path or v.pending.output_id)
        name = os.path.basename(path) or p.id
        if name in taken:
            name = f"{p.id}__{name}"
        taken.add(name)
        names[p.id] = name
    return names


def _group_tokens(binding, value) -> list:
    if value is None:
        return []
    if isinstance(value, bool):
        if value and binding.prefix:
            return [binding.prefix]
        return []
    text = render_value(value)
    if binding.prefix is None:
        return [text]
    if binding.separate:
        return [binding.prefix, text]
    return [binding.prefix + text]


def bind_arguments(
    doc: ToolDocument,
    inputs: InputSet,
    program=None,
    task_id: str = "task",
    staging_dir: Optional[str] = None,
    stdout_name: Optional[str] = None,
    stderr_name: Optional[str] = None,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> CommandPlan:
    """Render the command line and the expected outputs for one invocation.

    With ``staging_dir`` set, File inputs render as their staged path inside it.
    Argument entries sort before inputs at equal position; inputs tie-break by id.
    """
    for k, v in inputs.values.items():
        if isinstance(v, FileRef) and v.pending is not None:
            raise UnresolvedFuture(k)

    staged = []
    if staging_dir is not None:
        names = staged_names(doc, inputs)
        updates = {}
        for input_id, name in names.items():
            dest = os.path.join(staging_dir, name)
            staged.append((inputs.values[input_id].path, dest))
            updates[input_id] = FileRef(dest)
        inputs = inputs.with_values(updates)
    else:
        for p in doc.inputs:
            v = inputs.values.get(p.id)
            if isinstance(v, FileRef):
                staged.append((v.path, v.path))

    groups = []
    for i, arg in enumerate(doc.arguments):
        tpl = detect_template(arg.raw)
        if tpl is None:
            token = arg.raw
        else:
            token = evaluate_template(program, resolve_references(tpl, inputs), step_limit)
        groups.append(((0, 0, i, ""), [token]))
    for p in doc.inputs:
        if p.binding is None:
            continue
        tokens = _group_tokens(p.binding, inputs.values.get(p.id))
        if tokens:
            groups.append(((p.binding.position, 1, 0, p.id), tokens))
    groups.sort(key=lambda g: g[0])

    argv = list(doc.base_command)
    for _, tokens in groups:
        argv.extend(tokens)

    stdout_target = stdout_name or doc.stdout_name or f"{task_id}.stdout"
    stderr_target = stderr_name or doc.stderr_name or f"{task_id}.stderr"
    expected = []
    for o in doc.outputs:
        if o.kind == "stdout":
            expected.append(ExpectedOutput(o.id, o.kind, stdout_target))
        elif o.kind == "stderr":
            expected.append(ExpectedOutput(o.id, o.kind, stderr_target))
        else:
            expected.append(ExpectedOutput(o.id, o.kind, substitute_glob(o.glob_pattern, inputs)))
    return CommandPlan(
        argv=tuple(argv),
        stdout_target=stdout_target,
        stderr_target=stderr_target,
        expected_outputs=tuple(expected),
        sandbox_inputs=tuple(staged),
        workdir=staging_dir,
    )


def substitute_glob(pattern: str, inputs: InputSet) -> str:
    """Replace ``$(inputs.x)`` in a glob; File values contribute their basename."""
    out = pattern
    for ref in references_in(pattern):
        v = inputs.values.get(ref)
        if isinstance(v, FileRef):
            text = os.path.basename(render_value(v))
        elif v is None:
            text = ""
        else:
            text = render_value(v)
        out = out.replace(f"$(inputs.{ref})", text)
    return out


# -- outputs ---------------------------------------------------------------


def sha1_file(path: str) -> str:
    h = hashlib.sha1()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def describe_file(path: str) -> OutputFile:
    return OutputFile(path=path, size=os.path.getsize(path), checksum=sha1_file(path))


def glob_match(pattern: str, relpath: str) -> bool:
    """``*``, ``?`` and ``[...]`` per path component; ``*`` never crosses a separator."""
    pat_parts = pattern.strip("/").split("/")
    parts = relpath.split("/")
    if len(pat_parts) != len(parts):
        return False
    return all(fnmatch.fnmatchcase(p, q) for p, q in zip(parts, pat_parts))


def list_sandbox(root: str) -> list:
    """Relative paths (``/``-separated) of every regular file under ``root``."""
    out = []
    for dirpath, _dirs, files in os.walk(root):
        for f in files:
            rel = os.path.relpath(os.path.join(dirpath, f), root)
            out.append(rel.replace(os.sep, "/"))
    return sorted(out)


def resolve_outputs(plan: CommandPlan, sandbox_listing, exit_code: int = 0, root: Optional[str] = None) -> dict:
    """Map each expected output to an OutputFile found in the sandbox listing.

    ``sandbox_listing`` entries may be absolute or relative to ``root``
    (default ``plan.workdir``). File globs must match exactly one entry.
    Returns an ordered dict of output id to OutputFile.
    """
    root = root or plan.workdir or os.getcwd()
    rel = []
    for entry in sandbox_listing:
        entry = os.fspath(entry)
        if os.path.isabs(entry):
            entry = os.path.relpath(entry, root)
        rel.append(entry.replace(os.sep, "/"))
    rel.sort()
    present = set(rel)

    result = {}
    for out in plan.expected_outputs:
        if out.kind in ("stdout", "stderr"):
            if out.target not in present:
                raise MissingOutput(out.id, out.target)
            match = out.target
        else:
            matches = [p for p in rel if glob_match(out.target, p)]
            if not matches:
                raise MissingOutput(out.id, out.target)
            if len(matches) > 1:
                raise AmbiguousOutput(out.id, matches)
            match = matches[0]
        result[out.id] = describe_file(os.path.join(root, match))
    return result
