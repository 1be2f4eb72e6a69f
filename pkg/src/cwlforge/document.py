"""Loading and static checking of CWL CommandLineTool documents."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from cwlforge.errors import (
    ExpressionError,
    SchemaError,
    UnsupportedClass,
    UnsupportedVersion,
    YamlSyntax,
)
from cwlforge.expr import detect_template, is_template, references_in

SUPPORTED_VERSIONS = ("v1.2",)
VALUE_TYPES = ("string", "int", "long", "float", "double", "boolean", "File")
INLINE_EXPRESSION_CLASS = "InlinePythonRequirement"
STEP_INPUT_EXPRESSION_CLASS = "StepInputExpressionRequirement"


@dataclass(frozen=True)
class InputBinding:
    position: int = 0
    prefix: Optional[str] = None
    separate: bool = True


@dataclass(frozen=True)
class InputParameter:
    id: str
    value_type: str
    optional: bool = False
    default_value: Any = None
    binding: Optional[InputBinding] = None
    validate_template: Optional[str] = None
    doc: Optional[str] = None
    yaml_path: str = field(default="", compare=False)


@dataclass(frozen=True)
class OutputParameter:
    id: str
    kind: str  # stdout | stderr | file
    glob_pattern: Optional[str] = None
    yaml_path: str = field(default="", compare=False)


@dataclass(frozen=True)
class ArgumentEntry:
    raw: str

    @property
    def is_template(self) -> bool:
        return is_template(self.raw)


@dataclass(frozen=True)
class RequirementSet:
    inline_expression: Optional[tuple] = None  # expressionLib source strings, in order
    step_input_expression: bool = False
    other: tuple = ()  # unrecognised requirement class names, kept verbatim


@dataclass(frozen=True)
class ToolDocument:
    cwl_version: str
    base_command: tuple
    inputs: tuple = ()
    outputs: tuple = ()
    arguments: tuple = ()
    stdout_name: Optional[str] = None
    stderr_name: Optional[str] = None
    requirements: RequirementSet = RequirementSet()
    doc: Optional[str] = None
    tool_class: str = "CommandLineTool"
    origin: str = field(default="", compare=False)

    def input(self, input_id: str) -> InputParameter:
        for p in self.inputs:
            if p.id == input_id:
                return p
        raise KeyError(input_id)

    @property
    def input_ids(self) -> list:
        return [p.id for p in self.inputs]

    @property
    def name(self) -> str:
        if self.origin:
            return os.path.splitext(os.path.basename(self.origin))[0]
        return self.base_command[0]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.path}: {self.message}"


# -- parsing ---------------------------------------------------------------


def _entries(node, path: str, origin: str) -> list:
    """Normalise map or list form of inputs/outputs to (id, body, yaml_path) triples."""
    if node is None:
        return []
    out = []
    if isinstance(node, dict):
        for key, body in node.items():
            sub = f"{path}.{key}"
            if isinstance(body, str):
                body = {"type": body}
            elif body is None:
                raise SchemaError("missing 'type'", sub, origin)
            elif not isinstance(body, dict):
                raise SchemaError("expected a mapping", sub, origin)
            out.append((str(key), body, sub))
    elif isinstance(node, list):
        for i, body in enumerate(node):
            sub = f"{path}[{i}]"
            if not isinstance(body, dict):
                raise SchemaError("expected a mapping", sub, origin)
            if "id" not in body:
                raise SchemaError("missing required field 'id'", sub, origin)
            out.append((str(body["id"]).lstrip("#"), body, sub))
    else:
        raise SchemaError("expected a mapping or a list", path, origin)
    return out


def _conforms(value, value_type: str) -> bool:
    if value_type == "string":
        return isinstance(value, str)
    if value_type in ("int", "long"):
        return isinstance(value, int) and not isinstance(value, bool)
    if value_type in ("float", "double"):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if value_type == "boolean":
        return isinstance(value, bool)
    # File
    return isinstance(value, str) or (isinstance(value, dict) and value.get("class") == "File")


def _parse_input(input_id: str, body: dict, path: str, origin: str) -> InputParameter:
    type_name = body.get("type")
    if type_name is None:
        raise SchemaError("missing required field 'type'", path, origin)
    if not isinstance(type_name, str):
        raise SchemaError(f"unsupported type {type_name!r}", f"{path}.type", origin)
    optional = type_name.endswith("?")
    base = type_name[:-1] if optional else type_name
    if base not in VALUE_TYPES:
        raise SchemaError(f"unknown type name '{type_name}'", f"{path}.type", origin)

    default = body.get("default")
    if default is not None:
        if base in ("float", "double") and isinstance(default, int) and not isinstance(default, bool):
            default = float(default)
        if not _conforms(default, base):
            raise SchemaError(f"default {default!r} does not conform to {base}", f"{path}.default", origin)
        if isinstance(default, dict):
            default = default.get("path") or default.get("location")

    binding = None
    if "inputBinding" in body:
        b = body["inputBinding"] or {}
        if not isinstance(b, dict):
            raise SchemaError("expected a mapping", f"{path}.inputBinding", origin)
        position = b.get("position", 0)
        if not isinstance(position, int) or isinstance(position, bool):
            raise SchemaError("position must be an integer", f"{path}.inputBinding.position", origin)
        prefix = b.get("prefix")
        if prefix is not None and not isinstance(prefix, str):
            raise SchemaError("prefix must be a string", f"{path}.inputBinding.prefix", origin)
        separate = b.get("separate", True)
        if not isinstance(separate, bool):
            raise SchemaError("separate must be a boolean", f"{path}.inputBinding.separate", origin)
        binding = InputBinding(position=position, prefix=prefix, separate=separate)

    validate = body.get("validate")
    if validate is not None:
        if not isinstance(validate, str):
            raise SchemaError("validate must be a string", f"{path}.validate", origin)
        validate = validate.strip()
        try:
            tpl = detect_template(validate)
        except ExpressionError as exc:
            raise SchemaError(f"invalid validate template: {exc}", f"{path}.validate", origin) from None
        if tpl is None:
            raise SchemaError('validate must be an f"..." template', f"{path}.validate", origin)

    return InputParameter(
        id=input_id,
        value_type=base,
        optional=optional,
        default_value=default,
        binding=binding,
        validate_template=validate,
        doc=body.get("doc"),
        yaml_path=path,
    )


def _parse_output(output_id: str, body: dict, path: str, origin: str) -> OutputParameter:
    kind = body.get("type")
    if kind is None:
        raise SchemaError("missing required field 'type'", path, origin)
    if kind in ("stdout", "stderr"):
        if "outputBinding" in body:
            raise SchemaError(f"{kind} outputs take no outputBinding", f"{path}.outputBinding", origin)
        return OutputParameter(output_id, kind, yaml_path=path)
    if kind == "File":
        ob = body.get("outputBinding") or {}
        glob = ob.get("glob") if isinstance(ob, dict) else None
        if glob is not None and not isinstance(glob, str):
            raise SchemaError("glob must be a string", f"{path}.outputBinding.glob", origin)
        return OutputParameter(output_id, "file", glob, yaml_path=path)
    raise SchemaError(f"unsupported output type {kind!r}", f"{path}.type", origin)


def _parse_requirements(node, origin: str) -> RequirementSet:
    if node is None:
        return RequirementSet()
    items = []
    if isinstance(node, dict):
        for cls, body in node.items():
            body = dict(body or {})
            body["class"] = cls
            items.append((f"requirements.{cls}", body))
    elif isinstance(node, list):
        items = [(f"requirements[{i}]", body) for i, body in enumerate(node)]
    else:
        raise SchemaError("expected a list or mapping", "requirements", origin)

    inline = None
    step_input = False
    other = []
    for path, body in items:
        if not isinstance(body, dict) or "class" not in body:
            raise SchemaError("requirement needs a 'class'", path, origin)
        cls = body["class"]
        if cls == INLINE_EXPRESSION_CLASS:
            if inline is not None:
                raise SchemaError(f"duplicate {INLINE_EXPRESSION_CLASS}", path, origin)
            lib = body.get("expressionLib", [])
            if isinstance(lib, str):
                lib = [lib]
            if not isinstance(lib, list) or not all(isinstance(s, str) for s in lib):
                raise SchemaError("expressionLib must be a list of strings", f"{path}.expressionLib", origin)
            inline = tuple(lib)
        elif cls == STEP_INPUT_EXPRESSION_CLASS:
            step_input = True
        else:
            other.append(str(cls))
    return RequirementSet(inline_expression=inline, step_input_expression=step_input, other=tuple(other))


def parse_tool(source_text: str, origin_path: str = "") -> ToolDocument:
    """Parse YAML text into a ToolDocument, applying CWL defaults."""
    try:
        data = yaml.safe_load(source_text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise YamlSyntax(f"malformed YAML: {getattr(exc, 'problem', exc)}", where, origin_path) from None
    if not isinstance(data, dict):
        raise SchemaError("document must be a mapping", "", origin_path)

    cls = data.get("class")
    if cls is None:
        raise SchemaError("missing required field 'class'", "class", origin_path)
    if cls != "CommandLineTool":
        raise UnsupportedClass(f"unsupported class '{cls}' (only CommandLineTool)", "class", origin_path)
    version = data.get("cwlVersion")
    if version is None:
        raise SchemaError("missing required field 'cwlVersion'", "cwlVersion", origin_path)
    if version not in SUPPORTED_VERSIONS:
        raise UnsupportedVersion(f"unsupported cwlVersion '{version}'", "cwlVersion", origin_path)

    base = data.get("baseCommand")
    if base is None:
        raise SchemaError("missing required field 'baseCommand'", "baseCommand", origin_path)
    if isinstance(base, (str, int, float, bool)):
        base = [base]
    if not isinstance(base, list) or not base:
        raise SchemaError("baseCommand must be a string or a non-empty list", "baseCommand", origin_path)
    base = tuple(_scalar_text(b) for b in base)

    if "inputs" not in data:
        raise SchemaError("missing required field 'inputs'", "inputs", origin_path)
    if "outputs" not in data:
        raise SchemaError("missing required field 'outputs'", "outputs", origin_path)
    inputs = tuple(_parse_input(i, b, p, origin_path) for i, b, p in _entries(data["inputs"], "inputs", origin_path))
    outputs = tuple(
        _parse_output(i, b, p, origin_path) for i, b, p in _entries(data["outputs"], "outputs", origin_path)
    )

    args = data.get("arguments") or []
    if not isinstance(args, list):
        raise SchemaError("arguments must be a list", "arguments", origin_path)
    arguments = []
    for i, a in enumerate(args):
        if isinstance(a, (dict, list)):
            raise SchemaError("only string arguments are supported", f"arguments[{i}]", origin_path)
        arguments.append(ArgumentEntry(_scalar_text(a)))

    for key in ("stdout", "stderr", "doc"):
        if data.get(key) is not None and not isinstance(data[key], str):
            raise SchemaError(f"{key} must be a string", key, origin_path)

    return ToolDocument(
        cwl_version=version,
        base_command=base,
        inputs=inputs,
        outputs=outputs,
        arguments=tuple(arguments),
        stdout_name=data.get("stdout"),
        stderr_name=data.get("stderr"),
        requirements=_parse_requirements(data.get("requirements"), origin_path),
        doc=data.get("doc"),
        origin=origin_path,
    )


def _scalar_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def load_tool_file(path: str) -> ToolDocument:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_tool(text, os.path.abspath(path))


# -- static checks ---------------------------------------------------------


def validate_tool(doc: ToolDocument) -> list:
    """Semantic checks beyond the schema. Returns a list of Diagnostic."""
    diags = []
    has_lib = doc.requirements.inline_expression is not None
    ids = set(doc.input_ids)

    seen = set()
    for i, p in enumerate(doc.inputs):
        path = p.yaml_path or f"inputs[{i}]"
        if p.id in seen:
            diags.append(Diagnostic("error", path, f"duplicate input id '{p.id}'"))
        seen.add(p.id)
    seen = set()
    for i, o in enumerate(doc.outputs):
        path = o.yaml_path or f"outputs[{i}]"
        if o.id in seen:
            diags.append(Diagnostic("error", path, f"duplicate output id '{o.id}'"))
        seen.add(o.id)
        if o.kind == "file" and not o.glob_pattern:
            diags.append(Diagnostic("error", path, f"file output '{o.id}' has no glob"))
        if o.glob_pattern:
            for ref in references_in(o.glob_pattern):
                if ref not in ids:
                    diags.append(Diagnostic("error", f"{path}.outputBinding.glob", f"reference to unknown input '{ref}'"))

    def check_template(raw: str, path: str) -> None:
        try:
            tpl = detect_template(raw)
        except ExpressionError as exc:
            diags.append(Diagnostic("error", path, f"template syntax: {exc}"))
            return
        if tpl is None:
            return
        if not has_lib:
            diags.append(Diagnostic("error", path, f"expression template without {INLINE_EXPRESSION_CLASS}"))
        for ref in tpl.references:
            if ref not in ids:
                diags.append(Diagnostic("error", path, f"reference to unknown input '{ref}'"))

    for i, a in enumerate(doc.arguments):
        check_template(a.raw, f"arguments[{i}]")
    for i, p in enumerate(doc.inputs):
        if p.validate_template:
            check_template(p.validate_template, f"{p.yaml_path or f'inputs[{i}]'}.validate")

    if has_lib:
        from cwlforge.expr import parse_expression_lib

        try:
            parse_expression_lib(doc.requirements.inline_expression, doc.origin)
        except ExpressionError as exc:
            diags.append(Diagnostic("error", "requirements", f"expressionLib: {exc}"))
    for cls in doc.requirements.other:
        diags.append(Diagnostic("warning", "requirements", f"unsupported requirement '{cls}' ignored"))
    return diags


def errors_only(diags) -> list:
    return [d for d in diags if d.severity == "error"]


# -- debug emitter ---------------------------------------------------------


def to_yaml_data(doc: ToolDocument) -> dict:
    """Plain data for ``doc`` in the supported subset (inverse of parse_tool)."""
    data: dict = {"cwlVersion": doc.cwl_version, "class": doc.tool_class}
    if doc.doc is not None:
        data["doc"] = doc.doc
    reqs = []
    if doc.requirements.inline_expression is not None:
        reqs.append({"class": INLINE_EXPRESSION_CLASS, "expressionLib": list(doc.requirements.inline_expression)})
    if doc.requirements.step_input_expression:
        reqs.append({"class": STEP_INPUT_EXPRESSION_CLASS})
    reqs.extend({"class": c} for c in doc.requirements.other)
    if reqs:
        data["requirements"] = reqs
    data["baseCommand"] = list(doc.base_command)
    inputs = []
    for p in doc.inputs:
        body: dict = {"id": p.id, "type": p.value_type + ("?" if p.optional else "")}
        if p.default_value is not None:
            body["default"] = p.default_value
        if p.binding is not None:
            b: dict = {"position": p.binding.position, "separate": p.binding.separate}
            if p.binding.prefix is not None:
                b["prefix"] = p.binding.prefix
            body["inputBinding"] = b
        if p.validate_template is not None:
            body["validate"] = p.validate_template
        if p.doc is not None:
            body["doc"] = p.doc
        inputs.append(body)
    data["inputs"] = inputs
    outputs = []
    for o in doc.outputs:
        if o.kind == "file":
            body = {"id": o.id, "type": "File"}
            if o.glob_pattern is not None:
                body["outputBinding"] = {"glob": o.glob_pattern}
        else:
            body = {"id": o.id, "type": o.kind}
        outputs.append(body)
    data["outputs"] = outputs
    if doc.arguments:
        data["arguments"] = [a.raw for a in doc.arguments]
    if doc.stdout_name is not None:
        data["stdout"] = doc.stdout_name
    if doc.stderr_name is not None:
        data["stderr"] = doc.stderr_name
    return data


def serialize(doc: ToolDocument) -> str:
    return yaml.safe_dump(to_yaml_data(doc), sort_keys=False, allow_unicode=True)
