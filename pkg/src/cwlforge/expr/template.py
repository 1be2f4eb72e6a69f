"""f-string style templates and ``$(inputs.<id>)`` references."""

from __future__ import annotations

import ast
import copy
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from cwlforge.errors import TemplateSyntaxError, UnknownReference, UnresolvedFuture

REF_RE = re.compile(r"\$\(inputs\.([A-Za-z_][A-Za-z0-9_]*)\)")
# Placeholder identifiers injected for references; the dialect rejects user names with this prefix.
REF_PREFIX = "__cwlref_"


class Bound(ast.expr):
    """AST leaf holding an already-evaluated value bound from an input reference."""

    _fields = ("value", "ref")


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Interpolation:
    source: str  # original text between the braces, references included
    node: ast.expr = field(compare=False, repr=False)
    refs: tuple = ()
    offset: int = 0  # index of the opening brace within the raw template

    @property
    def resolved(self) -> bool:
        return not any(isinstance(n, ast.Name) and n.id.startswith(REF_PREFIX) for n in ast.walk(self.node))


Segment = Union[Literal, Interpolation]


@dataclass(frozen=True)
class Template:
    raw: str
    segments: tuple

    @property
    def references(self) -> list:
        seen = []
        for seg in self.segments:
            if isinstance(seg, Interpolation):
                for r in seg.refs:
                    if r not in seen:
                        seen.append(r)
        return seen

    def interior(self) -> str:
        """Rebuild the text between ``f"`` and the closing quote from the segments."""
        out = []
        for seg in self.segments:
            if isinstance(seg, Literal):
                out.append(seg.text.replace("{", "{{").replace("}", "}}"))
            else:
                out.append("{" + seg.source + "}")
        return "".join(out)


def is_template(entry: str) -> bool:
    s = entry.strip()
    return len(s) >= 3 and s.startswith('f"') and s.endswith('"')


def references_in(text: str) -> list:
    """Input ids referenced anywhere in ``text`` (used for globs and static checks)."""
    return REF_RE.findall(text)


def detect_template(entry: str) -> Optional[Template]:
    """Return a parsed Template when ``entry`` has the ``f"..."`` form, else None."""
    if not is_template(entry):
        return None
    raw = entry.strip()
    body = raw[2:-1]
    base = 2  # offset of body within raw
    segments: list = []
    buf: list = []
    i = 0
    n = len(body)
    while i < n:
        c = body[i]
        if c == "{":
            if i + 1 < n and body[i + 1] == "{":
                buf.append("{")
                i += 2
                continue
            end = _scan_interpolation(body, i + 1, raw, base)
            src = body[i + 1 : end]
            if buf:
                segments.append(Literal("".join(buf)))
                buf = []
            segments.append(_compile_interpolation(src, raw, base + i))
            i = end + 1
        elif c == "}":
            if i + 1 < n and body[i + 1] == "}":
                buf.append("}")
                i += 2
                continue
            raise TemplateSyntaxError("single '}' is not allowed", raw, base + i)
        else:
            buf.append(c)
            i += 1
    if buf:
        segments.append(Literal("".join(buf)))
    return Template(raw=raw, segments=tuple(segments))


def _scan_interpolation(body: str, start: int, raw: str, base: int) -> int:
    """Index of the brace closing the interpolation that starts at ``start``."""
    depth = 0
    quote = None
    i = start
    while i < len(body):
        c = body[i]
        if quote:
            if c == "\\":
                i += 2
                continue
            if c == quote:
                quote = None
        elif c in "'\"":
            quote = c
        elif c in "([{":
            depth += 1
        elif c in ")]":
            depth -= 1
            if depth < 0:
                raise TemplateSyntaxError(f"unbalanced '{c}'", raw, base + i)
        elif c == "}":
            if depth == 0:
                return i
            depth -= 1
        i += 1
    if quote:
        raise TemplateSyntaxError("unterminated string literal", raw, base + start)
    raise TemplateSyntaxError("unterminated '{'", raw, base + start - 1)


def _substitute_refs(src: str) -> tuple:
    """Replace references outside string literals with placeholder names."""
    out = []
    refs = []
    quote = None
    i = 0
    while i < len(src):
        c = src[i]
        if quote:
            out.append(c)
            if c == "\\" and i + 1 < len(src):
                out.append(src[i + 1])
                i += 2
                continue
            if c == quote:
                quote = None
            i += 1
            continue
        if c in "'\"":
            quote = c
            out.append(c)
            i += 1
            continue
        m = REF_RE.match(src, i)
        if m:
            refs.append(m.group(1))
            out.append(f" {REF_PREFIX}{m.group(1)} ")
            i = m.end()
            continue
        out.append(c)
        i += 1
    return "".join(out), refs


def _compile_interpolation(src: str, raw: str, offset: int) -> Interpolation:
    from cwlforge.expr.interp import check_dialect  # late import: interp imports this module

    if not src.strip():
        raise TemplateSyntaxError("empty expression in template", raw, offset)
    text, refs = _substitute_refs(src)
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise TemplateSyntaxError(f"invalid expression: {exc.msg}", raw, offset + 1) from None
    try:
        check_dialect(tree.body, allow_refs=True)
    except Exception as exc:
        raise TemplateSyntaxError(str(exc), raw, offset + 1) from None
    return Interpolation(source=src, node=tree.body, refs=tuple(dict.fromkeys(refs)), offset=offset)


class _Binder(ast.NodeTransformer):
    def __init__(self, values: Mapping):
        self.values = values

    def visit_Name(self, node: ast.Name):
        if node.id.startswith(REF_PREFIX):
            ref = node.id[len(REF_PREFIX) :]
            return ast.copy_location(Bound(value=self.values[ref], ref=ref), node)
        return node


def resolve_references(tpl: Template, inputs) -> Template:
    """Bind every reference in ``tpl`` to the matching input value.

    ``inputs`` is an InputSet or a plain mapping of input id to value. Values are
    inserted as opaque AST leaves, so their text is never re-parsed.
    """
    from cwlforge.binding import FileRef

    values = inputs if isinstance(inputs, Mapping) else inputs.values
    bound = {}
    for ref in tpl.references:
        if ref not in values:
            raise UnknownReference(ref)
        v = values[ref]
        if isinstance(v, FileRef):
            if v.pending is not None:
                raise UnresolvedFuture(ref)
            v = v.path
        bound[ref] = v
    segments = []
    for seg in tpl.segments:
        if isinstance(seg, Interpolation) and seg.refs:
            node = _Binder(bound).visit(copy.deepcopy(seg.node))
            seg = Interpolation(source=seg.source, node=node, refs=seg.refs, offset=seg.offset)
        segments.append(seg)
    return Template(raw=tpl.raw, segments=tuple(segments))
