"""Call a CommandLineTool like a Python function and get futures back."""

from __future__ import annotations

import os
from typing import Optional

from cwlforge.binding import bind_arguments, coerce_inputs
from cwlforge.document import ToolDocument, errors_only, load_tool_file, validate_tool
from cwlforge.engine import Engine, TaskHandle, TaskSpec
from cwlforge.errors import DocumentError, InvalidTool
from cwlforge.expr import ExpressionProgram, detect_template, parse_expression_lib, run_validations


class ToolApp:
    """A loaded, validated tool bound to an engine. Immutable and reusable.

    >>> echo = load_tool("echo.cwl", engine)            # doctest: +SKIP
    >>> h = echo(message="Hello, World!", stdout="hello.txt")  # doctest: +SKIP
    >>> open(h.outputs[0].result()).read()              # doctest: +SKIP
    'Hello, World!\\n'
    """

    def __init__(self, doc: ToolDocument, engine: Engine, program: Optional[ExpressionProgram] = None):
        errors = errors_only(validate_tool(doc))
        if errors:
            raise InvalidTool(errors, origin=doc.origin)
        if program is None and doc.requirements.inline_expression is not None:
            program = parse_expression_lib(doc.requirements.inline_expression, doc.origin)
        self.doc = doc
        self.program = program
        self.engine = engine

    def __repr__(self) -> str:
        return f"<ToolApp {self.doc.name}>"

    @property
    def output_ids(self) -> tuple:
        return tuple(o.id for o in self.doc.outputs)

    def __call__(self, **kwargs) -> TaskHandle:
        ids = set(self.doc.input_ids)
        overrides = {k: kwargs.pop(k) for k in ("stdout", "stderr") if k in kwargs and k not in ids}
        return self.invoke(kwargs, **overrides)

    def invoke(
        self,
        raw_inputs: dict,
        stdout: Optional[str] = None,
        stderr: Optional[str] = None,
        base_dir: Optional[str] = None,
    ) -> TaskHandle:
        """Coerce and validate inputs now, then submit the task.

        FileFuture inputs become dependencies; validations that read them run
        once they resolve, just before the command line is built.
        """
        doc = self.doc
        inputs = coerce_inputs(doc, raw_inputs, base_dir)
        pending = set(inputs.pending())
        deferred = set()
        for p in doc.inputs:
            if p.validate_template and set(detect_template(p.validate_template).references) & pending:
                deferred.add(p.id)
        immediate = {p.id for p in doc.inputs if p.validate_template} - deferred
        step_limit = self.engine.step_limit
        if immediate:
            run_validations(doc, inputs, self.program, step_limit, only=immediate)

        task_id = self.engine.new_task_id(doc.name)
        program = self.program

        def plan_factory(sandbox_root: str):
            final = inputs.finalized()
            if deferred:
                run_validations(doc, final, program, step_limit, only=deferred)
            return bind_arguments(doc, final, program, task_id, sandbox_root, stdout, stderr, step_limit)

        spec = TaskSpec(
            task_id=task_id,
            plan_factory=plan_factory,
            dependencies=tuple(inputs.pending().values()),
            output_ids=self.output_ids,
            env_policy=self.engine.config.env_policy,
        )
        return self.engine.submit(spec)


def load_tool(path, engine: Engine) -> ToolApp:
    """Parse, validate and wrap the tool at ``path``."""
    path = os.fspath(path)
    try:
        doc = load_tool_file(path)
    except OSError as exc:
        raise DocumentError(f"cannot read tool: {exc.strerror or exc}", origin=path) from exc
    return ToolApp(doc, engine)
