"""Inline expression support: function library, templates, references, validation."""

from __future__ import annotations

from cwlforge.errors import ExpressionRaised, ValidationFailed
from cwlforge.expr.interp import (
    DEFAULT_STEP_LIMIT,
    EMPTY_PROGRAM,
    ExpressionProgram,
    FunctionDef,
    check_dialect,
    evaluate_template,
    evaluate_template_values,
    parse_expression_lib,
    stringify,
    title_case,
)
from cwlforge.expr.template import (
    Interpolation,
    Literal,
    Template,
    detect_template,
    is_template,
    references_in,
    resolve_references,
)

__all__ = [
    "DEFAULT_STEP_LIMIT",
    "EMPTY_PROGRAM",
    "ExpressionProgram",
    "FunctionDef",
    "Interpolation",
    "Literal",
    "Template",
    "check_dialect",
    "detect_template",
    "evaluate_template",
    "is_template",
    "parse_expression_lib",
    "references_in",
    "resolve_references",
    "run_validations",
    "stringify",
    "title_case",
]


def run_validations(doc, inputs, program, step_limit: int = DEFAULT_STEP_LIMIT, only=None) -> None:
    """Evaluate each input's ``validate`` template in declaration order.

    Return values are discarded; the first template that raises aborts with
    ValidationFailed. ``only`` restricts the run to a subset of input ids.
    """
    for param in doc.inputs:
        if param.validate_template is None:
            continue
        if only is not None and param.id not in only:
            continue
        tpl = detect_template(param.validate_template)
        if tpl is None:
            continue
        tpl = resolve_references(tpl, inputs)
        try:
            evaluate_template_values(program, tpl, step_limit)
        except ExpressionRaised as exc:
            raise ValidationFailed(param.id, exc.message) from exc
