"""Exception hierarchy shared by every cwlforge module."""

from __future__ import annotations


class CwlForgeError(Exception):
    """Base class for all errors raised by cwlforge."""


# -- documents -------------------------------------------------------------


class DocumentError(CwlForgeError):
    """A tool document could not be loaded. ``path`` is the YAML path of the bad node."""

    def __init__(self, message: str, path: str = "", origin: str = ""):
        self.message = message
        self.path = path
        self.origin = origin
        where = ":".join(p for p in (origin, path) if p)
        super().__init__(f"{where}: {message}" if where else message)


class YamlSyntax(DocumentError):
    pass


class UnsupportedClass(DocumentError):
    pass


class UnsupportedVersion(DocumentError):
    pass


class SchemaError(DocumentError):
    pass


class InvalidTool(DocumentError):
    """validate_tool reported error diagnostics."""

    def __init__(self, diagnostics, origin: str = ""):
        self.diagnostics = list(diagnostics)
        text = "; ".join(f"{d.path}: {d.message}" for d in self.diagnostics)
        super().__init__(text, origin=origin)


# -- binding ---------------------------------------------------------------


class InputError(CwlForgeError):
    def __init__(self, input_id: str, message: str):
        self.input_id = input_id
        super().__init__(message)


class UnknownInput(InputError):
    def __init__(self, input_id: str):
        super().__init__(input_id, f"unknown input '{input_id}'")


class MissingRequiredInput(InputError):
    def __init__(self, input_id: str):
        super().__init__(input_id, f"missing required input '{input_id}'")


class TypeMismatch(InputError):
    def __init__(self, input_id: str, expected: str, got: str):
        self.expected = expected
        self.got = got
        super().__init__(input_id, f"input '{input_id}': expected {expected}, got {got}")


class UnresolvedFuture(CwlForgeError):
    def __init__(self, input_id: str):
        self.input_id = input_id
        super().__init__(f"input '{input_id}' refers to a file future that has not resolved")


class OutputError(CwlForgeError):
    def __init__(self, output_id: str, message: str):
        self.output_id = output_id
        super().__init__(message)


class MissingOutput(OutputError):
    def __init__(self, output_id: str, pattern: str = ""):
        super().__init__(output_id, f"output '{output_id}' matched nothing ({pattern!r})")


class AmbiguousOutput(OutputError):
    def __init__(self, output_id: str, matches):
        self.matches = list(matches)
        super().__init__(output_id, f"output '{output_id}' matched {len(self.matches)} files: {self.matches}")


# -- expressions -----------------------------------------------------------


class ExpressionError(CwlForgeError):
    pass


class DialectSyntaxError(ExpressionError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class DuplicateFunction(ExpressionError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"function '{name}' defined more than once")


class TemplateSyntaxError(ExpressionError):
    def __init__(self, message: str, raw: str = "", offset: int = 0):
        self.raw = raw
        self.offset = offset
        detail = f"\n  {raw}\n  {' ' * offset}^" if raw else ""
        super().__init__(message + detail)


class UnknownReference(ExpressionError):
    def __init__(self, ref: str):
        self.ref = ref
        super().__init__(f"unknown reference $(inputs.{ref})")


class ExpressionRaised(ExpressionError):
    """Dialect code executed ``raise Exception(msg)``; ``str(exc)`` is ``msg`` verbatim."""

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class StepLimitExceeded(ExpressionError):
    pass


class TypeErrorInExpression(ExpressionError):
    pass


class ValidationFailed(CwlForgeError):
    def __init__(self, input_id: str, message: str):
        self.input_id = input_id
        self.message = message
        super().__init__(f"validation of input '{input_id}' failed: {message}")


# -- engine ----------------------------------------------------------------


class EngineShutDown(CwlForgeError):
    pass


class UnknownDependency(CwlForgeError):
    pass


class StagingError(CwlForgeError):
    pass


class TaskFailed(CwlForgeError):
    """Raised by ``TaskHandle.result()`` when the task did not succeed."""

    def __init__(self, failure):
        self.failure = failure
        super().__init__(str(failure))


# -- config / cli ----------------------------------------------------------


class InvalidValue(CwlForgeError):
    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"config key '{key}': {reason}")


class NotAMapping(CwlForgeError):
    pass
