"""Minimal positioned XML tree on top of expat.

ElementTree drops line numbers and source spans; both are needed for
diagnostics and for verbatim passthrough of unknown subtrees.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.parsers import expat
from xml.sax.saxutils import escape

_ATTR_ENTITIES = {'"': "&quot;", "\n": "&#10;", "\r": "&#13;", "\t": "&#9;"}


@dataclass
class Element:
    tag: str
    attrs: list[tuple[str, str]]
    line: int
    column: int
    start: int
    end: int = -1
    children: list["Element"] = field(default_factory=list)
    text: str = ""

    def get(self, name, default=None):
        for k, v in self.attrs:
            if k == name:
                return v
        return default

    def attr_dict(self):
        return dict(self.attrs)


class XMLSyntaxError(Exception):
    def __init__(self, message, line, column):
        super().__init__(message)
        self.line = line
        self.column = column


def _tag_end(data: bytes, start: int) -> int:
    """Index just past the '>' closing the tag that begins at ``start``."""
    quote = None
    i = start
    n = len(data)
    while i < n:
        c = data[i]
        if quote is not None:
            if c == quote:
                quote = None
        elif c in (0x22, 0x27):
            quote = c
        elif c == 0x3E:
            return i + 1
        i += 1
    return n


def parse(data: bytes) -> Element:
    if isinstance(data, str):
        data = data.encode("utf-8")
    parser = expat.ParserCreate()
    parser.ordered_attributes = True
    parser.buffer_text = True
    stack: list[Element] = []
    root: list[Element] = []

    def start(tag, attrs):
        el = Element(
            tag,
            list(zip(attrs[::2], attrs[1::2])),
            parser.CurrentLineNumber,
            parser.CurrentColumnNumber + 1,
            parser.CurrentByteIndex,
        )
        if stack:
            stack[-1].children.append(el)
        else:
            root.append(el)
        stack.append(el)

    def end(tag):
        el = stack.pop()
        head_end = _tag_end(data, el.start)
        if data[head_end - 2:head_end] == b"/>":
            el.end = head_end
        else:
            el.end = _tag_end(data, parser.CurrentByteIndex)

    def chars(text):
        if stack:
            stack[-1].text += text

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise XMLSyntaxError(expat.ErrorString(exc.code), exc.lineno, exc.offset + 1) from None
    except (ValueError, RecursionError) as exc:
        raise XMLSyntaxError(str(exc), parser.CurrentLineNumber, parser.CurrentColumnNumber + 1) from None
    if not root:
        raise XMLSyntaxError("no root element", 1, 1)
    return root[0]


def quote_attr(value: str) -> str:
    return '"' + escape(value, _ATTR_ENTITIES) + '"'


def format_attrs(pairs) -> str:
    return "".join(f" {k}={quote_attr(v)}" for k, v in pairs)
