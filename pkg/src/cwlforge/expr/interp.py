"""Tree-walking interpreter for the inline expression dialect.

The dialect is a small, side-effect free subset of Python. Source text is
parsed with :mod:`ast`; every node is checked against the allowed subset
before anything runs, and evaluation walks the tree with a step budget.
"""

from __future__ import annotations

import ast
import re
import textwrap
from dataclasses import dataclass, field
from typing import Optional

from cwlforge.errors import (
    DialectSyntaxError,
    DuplicateFunction,
    ExpressionRaised,
    StepLimitExceeded,
    TypeErrorInExpression,
    UnknownReference,
)
from cwlforge.expr.template import REF_PREFIX, Bound, Interpolation, Template

DEFAULT_STEP_LIMIT = 1_000_000
# Dialect call depth is bounded separately so deep recursion can't exhaust the host stack.
MAX_CALL_DEPTH = 100

STRING_METHODS = frozenset(
    {"title", "lower", "upper", "strip", "startswith", "endswith", "replace", "split", "join"}
)
BUILTINS = frozenset({"len", "str", "int", "float"})

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Mod)
_CMPOPS = (ast.Eq, ast.NotEq, ast.Lt, ast.LtE, ast.Gt, ast.GtE)


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple
    body: tuple = field(compare=False, repr=False)


@dataclass(frozen=True)
class ExpressionProgram:
    functions: dict = field(default_factory=dict)
    source_origin: str = ""

    def __contains__(self, name: str) -> bool:
        return name in self.functions


EMPTY_PROGRAM = ExpressionProgram()


# -- static checks ---------------------------------------------------------


def _bad(node: ast.AST, what: str) -> DialectSyntaxError:
    return DialectSyntaxError(what, getattr(node, "lineno", 0), getattr(node, "col_offset", 0))


def check_dialect(node: ast.AST, allow_refs: bool = False) -> None:
    """Raise DialectSyntaxError if ``node`` uses anything outside the dialect."""
    if isinstance(node, ast.stmt):
        _check_stmt(node, allow_refs)
    else:
        _check_expr(node, allow_refs)


def _check_stmt(node: ast.stmt, allow_refs: bool) -> None:
    if isinstance(node, ast.Return):
        if node.value is not None:
            _check_expr(node.value, allow_refs)
    elif isinstance(node, ast.Raise):
        exc = node.exc
        if (
            node.cause is not None
            or not isinstance(exc, ast.Call)
            or not isinstance(exc.func, ast.Name)
            or exc.func.id != "Exception"
            or len(exc.args) != 1
            or exc.keywords
        ):
            raise _bad(node, "only 'raise Exception(<message>)' is supported")
        _check_expr(exc.args[0], allow_refs)
    elif isinstance(node, ast.If):
        _check_expr(node.test, allow_refs)
        for s in node.body + node.orelse:
            _check_stmt(s, allow_refs)
    elif isinstance(node, ast.Assign):
        if len(node.targets) != 1 or not isinstance(node.targets[0], ast.Name):
            raise _bad(node, "assignment target must be a single name")
        _check_name(node.targets[0])
        _check_expr(node.value, allow_refs)
    elif isinstance(node, ast.Expr):
        _check_expr(node.value, allow_refs)
    elif isinstance(node, ast.Pass):
        pass
    elif isinstance(node, ast.FunctionDef):
        raise _bad(node, "nested function definitions are not supported")
    else:
        raise _bad(node, f"'{type(node).__name__}' statements are not supported")


def _check_name(node: ast.Name) -> None:
    if node.id.startswith(REF_PREFIX):
        raise _bad(node, f"reserved name '{node.id}'")


def _check_expr(node: ast.expr, allow_refs: bool) -> None:
    if isinstance(node, ast.Constant):
        if not (node.value is None or isinstance(node.value, (str, int, float, bool))):
            raise _bad(node, f"unsupported literal {node.value!r}")
    elif isinstance(node, ast.Name):
        if node.id.startswith(REF_PREFIX) and not allow_refs:
            _check_name(node)
    elif isinstance(node, Bound):
        pass
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise _bad(node, f"operator '{type(node.op).__name__}' is not supported")
        _check_expr(node.left, allow_refs)
        _check_expr(node.right, allow_refs)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd, ast.Not)):
            raise _bad(node, f"operator '{type(node.op).__name__}' is not supported")
        _check_expr(node.operand, allow_refs)
    elif isinstance(node, ast.BoolOp):
        for v in node.values:
            _check_expr(v, allow_refs)
    elif isinstance(node, ast.Compare):
        for op in node.ops:
            if not isinstance(op, _CMPOPS):
                raise _bad(node, f"comparison '{type(op).__name__}' is not supported")
        _check_expr(node.left, allow_refs)
        for c in node.comparators:
            _check_expr(c, allow_refs)
    elif isinstance(node, ast.Call):
        if node.keywords:
            raise _bad(node, "keyword arguments are not supported")
        for a in node.args:
            if isinstance(a, ast.Starred):
                raise _bad(a, "star arguments are not supported")
            _check_expr(a, allow_refs)
        f = node.func
        if isinstance(f, ast.Name):
            _check_name(f)
        elif isinstance(f, ast.Attribute):
            if f.attr not in STRING_METHODS:
                raise _bad(f, f"method '{f.attr}' is not supported")
            _check_expr(f.value, allow_refs)
        else:
            raise _bad(node, "only named functions and string methods can be called")
    elif isinstance(node, ast.JoinedStr):
        for v in node.values:
            _check_expr(v, allow_refs)
    elif isinstance(node, ast.FormattedValue):
        if node.conversion != -1 or node.format_spec is not None:
            raise _bad(node, "conversions and format specs are not supported")
        _check_expr(node.value, allow_refs)
    else:
        raise _bad(node, f"'{type(node).__name__}' expressions are not supported")


# -- parsing ---------------------------------------------------------------


def parse_expression_lib(sources, origin: str = "") -> ExpressionProgram:
    """Concatenate ``sources`` in order and parse them into a function library."""
    text = "\n".join(textwrap.dedent(s) for s in sources)
    try:
        module = ast.parse(text)
    except SyntaxError as exc:
        raise DialectSyntaxError(exc.msg, exc.lineno or 0, exc.offset or 0) from None
    functions: dict = {}
    for stmt in module.body:
        if _is_docstring(stmt):
            continue
        if not isinstance(stmt, ast.FunctionDef):
            raise _bad(stmt, "only function definitions are allowed at top level")
        a = stmt.args
        if (
            stmt.decorator_list
            or a.vararg
            or a.kwarg
            or a.kwonlyargs
            or a.posonlyargs
            or a.defaults
            or stmt.returns is not None
        ):
            raise _bad(stmt, f"function '{stmt.name}' uses an unsupported signature")
        if stmt.name in BUILTINS or stmt.name == "Exception" or stmt.name.startswith(REF_PREFIX):
            raise _bad(stmt, f"function name '{stmt.name}' is reserved")
        if stmt.name in functions:
            raise DuplicateFunction(stmt.name)
        body = list(stmt.body)
        if body and _is_docstring(body[0]):
            body = body[1:]
        for s in body:
            _check_stmt(s, allow_refs=False)
        functions[stmt.name] = FunctionDef(stmt.name, tuple(arg.arg for arg in a.args), tuple(body))
    for fn in functions.values():
        for stmt in fn.body:
            for node in ast.walk(stmt):
                if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
                    name = node.func.id
                    if name not in functions and name not in BUILTINS and not _is_raise_ctor(stmt, node):
                        raise _bad(node, f"call to undefined function '{name}'")
    return ExpressionProgram(functions=functions, source_origin=origin)


def _is_raise_ctor(stmt: ast.stmt, call: ast.Call) -> bool:
    return any(isinstance(n, ast.Raise) and n.exc is call for n in ast.walk(stmt))


def _is_docstring(stmt: ast.stmt) -> bool:
    return isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Constant) and isinstance(stmt.value.value, str)


# -- values ----------------------------------------------------------------


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _type_name(v) -> str:
    if v is None:
        return "None"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, tuple):
        return "list"
    return type(v).__name__


def stringify(v) -> str:
    """Canonical text form used when a value lands in a command line."""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "null"
    raise TypeErrorInExpression(f"cannot convert {_type_name(v)} to a string")


def truthy(v) -> bool:
    if isinstance(v, (str, tuple)):
        return len(v) > 0
    if v is None:
        return False
    return bool(v)


_WORD_RE = re.compile(r"\S+")
_ALPHA_RE = re.compile(r"[^\W\d_]")


def _title_word(m: re.Match) -> str:
    word = m.group(0)
    a = _ALPHA_RE.search(word)
    if a is None:
        return word.lower()
    i = a.start()
    return word[:i].lower() + word[i].upper() + word[i + 1 :].lower()


def title_case(s: str) -> str:
    """Upper-case the first letter of each whitespace-delimited word, lower-case the rest."""
    return _WORD_RE.sub(_title_word, s)


def _equal(a, b) -> bool:
    if _is_num(a) and _is_num(b):
        return a == b
    return type(a) is type(b) and a == b


# -- evaluation ------------------------------------------------------------


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class Interpreter:
    """Evaluates dialect AST against a program. One instance per evaluation."""

    def __init__(self, program: ExpressionProgram, step_limit: int = DEFAULT_STEP_LIMIT):
        self.program = program
        self.step_limit = step_limit
        self.steps = 0
        self.depth = 0

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.step_limit:
            raise StepLimitExceeded(f"expression exceeded the step limit of {self.step_limit}")

    # statements

    def call(self, name: str, args: list):
        fn = self.program.functions.get(name)
        if fn is None:
            raise TypeErrorInExpression(f"unknown function '{name}'")
        if len(args) != len(fn.params):
            raise TypeErrorInExpression(f"{name}() takes {len(fn.params)} arguments but {len(args)} were given")
        self.depth += 1
        if self.depth > MAX_CALL_DEPTH:
            raise StepLimitExceeded(f"call depth exceeded {MAX_CALL_DEPTH} in '{name}'")
        env = dict(zip(fn.params, args))
        try:
            self.exec_block(fn.body, env)
        except _Return as r:
            return r.value
        finally:
            self.depth -= 1
        return None

    def exec_block(self, body, env: dict) -> None:
        for stmt in body:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt: ast.stmt, env: dict) -> None:
        self._tick()
        if isinstance(stmt, ast.Return):
            raise _Return(None if stmt.value is None else self.eval(stmt.value, env))
        if isinstance(stmt, ast.If):
            self.exec_block(stmt.body if truthy(self.eval(stmt.test, env)) else stmt.orelse, env)
        elif isinstance(stmt, ast.Assign):
            env[stmt.targets[0].id] = self.eval(stmt.value, env)
        elif isinstance(stmt, ast.Expr):
            self.eval(stmt.value, env)
        elif isinstance(stmt, ast.Raise):
            msg = self.eval(stmt.exc.args[0], env)
            raise ExpressionRaised(stringify(msg))
        elif isinstance(stmt, ast.Pass):
            pass
        else:  # pragma: no cover - rejected by check_dialect
            raise TypeErrorInExpression(f"unsupported statement {type(stmt).__name__}")

    # expressions

    def eval(self, node: ast.expr, env: dict):
        self._tick()
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, Bound):
            return node.value
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id.startswith(REF_PREFIX):
                raise UnknownReference(node.id[len(REF_PREFIX) :])
            raise TypeErrorInExpression(f"name '{node.id}' is not defined")
        if isinstance(node, ast.BinOp):
            return self._binop(node.op, self.eval(node.left, env), self.eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self.eval(node.operand, env)
            if isinstance(node.op, ast.Not):
                return not truthy(v)
            if not _is_num(v):
                raise TypeErrorInExpression(f"bad operand type for unary operator: {_type_name(v)}")
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BoolOp):
            is_and = isinstance(node.op, ast.And)
            v = None
            for sub in node.values:
                v = self.eval(sub, env)
                if truthy(v) != is_and:
                    return v
            return v
        if isinstance(node, ast.Compare):
            left = self.eval(node.left, env)
            for op, comp in zip(node.ops, node.comparators):
                right = self.eval(comp, env)
                if not self._compare(op, left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.Call):
            return self._call(node, env)
        if isinstance(node, ast.JoinedStr):
            return "".join(self.eval(v, env) for v in node.values)
        if isinstance(node, ast.FormattedValue):
            return stringify(self.eval(node.value, env))
        raise TypeErrorInExpression(f"unsupported expression {type(node).__name__}")  # pragma: no cover

    def _binop(self, op, a, b):
        if not (_is_num(a) and _is_num(b)):
            raise TypeErrorInExpression(
                f"unsupported operand types for {type(op).__name__}: {_type_name(a)} and {_type_name(b)}"
            )
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        if b == 0:
            raise ExpressionRaised("division by zero")
        if isinstance(op, ast.Div):
            return float(a) / float(b)
        return a % b

    def _compare(self, op, a, b) -> bool:
        if isinstance(op, ast.Eq):
            return _equal(a, b)
        if isinstance(op, ast.NotEq):
            return not _equal(a, b)
        if not ((_is_num(a) and _is_num(b)) or (isinstance(a, str) and isinstance(b, str))):
            raise TypeErrorInExpression(f"cannot order {_type_name(a)} and {_type_name(b)}")
        if isinstance(op, ast.Lt):
            return a < b
        if isinstance(op, ast.LtE):
            return a <= b
        if isinstance(op, ast.Gt):
            return a > b
        return a >= b

    def _call(self, node: ast.Call, env: dict):
        f = node.func
        if isinstance(f, ast.Attribute):
            target = self.eval(f.value, env)
            args = [self.eval(a, env) for a in node.args]
            return _string_method(target, f.attr, args)
        args = [self.eval(a, env) for a in node.args]
        name = f.id
        if name in self.program.functions:
            return self.call(name, args)
        if name in BUILTINS:
            return _builtin(name, args)
        raise TypeErrorInExpression(f"unknown function '{name}'")


def _arity(name: str, args: list, lo: int, hi: int) -> None:
    if not lo <= len(args) <= hi:
        raise TypeErrorInExpression(f"{name}() takes {lo}..{hi} arguments, got {len(args)}")


def _need_str(name: str, v) -> str:
    if not isinstance(v, str):
        raise TypeErrorInExpression(f"{name}() expects a string, got {_type_name(v)}")
    return v


def _builtin(name: str, args: list):
    _arity(name, args, 1, 1)
    (v,) = args
    if name == "len":
        if isinstance(v, (str, tuple)):
            return len(v)
        raise TypeErrorInExpression(f"len() of {_type_name(v)}")
    if name == "str":
        return stringify(v)
    if name == "int":
        if _is_num(v):
            return int(v)
        if isinstance(v, str):
            try:
                return int(v.strip())
            except ValueError:
                raise ExpressionRaised(f"invalid literal for int(): {v!r}") from None
        raise TypeErrorInExpression(f"int() of {_type_name(v)}")
    # float
    if _is_num(v):
        return float(v)
    if isinstance(v, str):
        try:
            return float(v.strip())
        except ValueError:
            raise ExpressionRaised(f"could not convert string to float: {v!r}") from None
    raise TypeErrorInExpression(f"float() of {_type_name(v)}")


def _string_method(target, method: str, args: list):
    if not isinstance(target, str):
        raise TypeErrorInExpression(f"'{_type_name(target)}' has no method '{method}'")
    if method in ("title", "lower", "upper"):
        _arity(method, args, 0, 0)
        return title_case(target) if method == "title" else getattr(target, method)()
    if method == "strip":
        _arity(method, args, 0, 1)
        return target.strip(*(_need_str(method, a) for a in args))
    if method in ("startswith", "endswith"):
        _arity(method, args, 1, 1)
        return getattr(target, method)(_need_str(method, args[0]))
    if method == "replace":
        _arity(method, args, 2, 2)
        return target.replace(_need_str(method, args[0]), _need_str(method, args[1]))
    if method == "split":
        _arity(method, args, 0, 1)
        sep = _need_str(method, args[0]) if args else None
        if sep == "":
            raise ExpressionRaised("empty separator")
        return tuple(target.split(sep))
    # join
    _arity(method, args, 1, 1)
    items = args[0]
    if isinstance(items, str):
        items = tuple(items)
    if not isinstance(items, tuple) or not all(isinstance(x, str) for x in items):
        raise TypeErrorInExpression("join() expects a list of strings")
    return target.join(items)


def evaluate_expression(program: ExpressionProgram, node: ast.expr, step_limit: int = DEFAULT_STEP_LIMIT):
    return Interpreter(program, step_limit).eval(node, {})


def evaluate_template(
    program: Optional[ExpressionProgram], tpl: Template, step_limit: int = DEFAULT_STEP_LIMIT
) -> str:
    """Evaluate every interpolation of an already-resolved template and join the text."""
    interp = Interpreter(program or EMPTY_PROGRAM, step_limit)
    out = []
    for seg in tpl.segments:
        if isinstance(seg, Interpolation):
            out.append(stringify(interp.eval(seg.node, {})))
        else:
            out.append(seg.text)
    return "".join(out)


def evaluate_template_values(
    program: Optional[ExpressionProgram], tpl: Template, step_limit: int = DEFAULT_STEP_LIMIT
) -> list:
    """Raw values of each interpolation, without stringification (used by validations)."""
    interp = Interpreter(program or EMPTY_PROGRAM, step_limit)
    return [interp.eval(seg.node, {}) for seg in tpl.segments if isinstance(seg, Interpolation)]
