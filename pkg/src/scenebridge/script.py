"""Lexer and generic block parser for OGRE's brace-delimited script family.

Grammar::

    block    := keyword [name] modifier* NEWLINE* '{' (property | block)* '}'
    property := key token* NEWLINE
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import ScriptSyntaxError

MAX_DEPTH = 64

_NUMBER = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\Z")


class Tok(str, Enum):
    WORD = "ident"
    NUMBER = "number"
    STRING = "string"
    LBRACE = "lbrace"
    RBRACE = "rbrace"
    NEWLINE = "newline"


@dataclass(frozen=True)
class Token:
    kind: Tok
    text: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


def tokenize_script(data: bytes | str) -> list[Token]:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScriptSyntaxError("bad-encoding", f"invalid UTF-8 at byte {exc.start}") from None
    toks: list[Token] = []
    i, n = 0, len(data)
    line, line_start = 1, 0

    def emit(kind, text, start):
        toks.append(Token(kind, text, line, start - line_start + 1))

    while i < n:
        c = data[i]
        if c == "\n":
            if toks and toks[-1].kind is not Tok.NEWLINE:
                emit(Tok.NEWLINE, "\n", i)
            i += 1
            line, line_start = line + 1, i
        elif c.isspace():
            i += 1
        elif data.startswith("//", i):
            j = data.find("\n", i)
            i = n if j < 0 else j
        elif data.startswith("/*", i):
            j = data.find("*/", i + 2)
            if j < 0:
                raise ScriptSyntaxError("unterminated-comment", "unterminated /* comment",
                                        line, i - line_start + 1)
            newlines = data.count("\n", i, j)
            if newlines:
                if toks and toks[-1].kind is not Tok.NEWLINE:
                    emit(Tok.NEWLINE, "\n", i)
                line += newlines
                line_start = data.rfind("\n", i, j) + 1
            i = j + 2
        elif c == "{":
            emit(Tok.LBRACE, c, i)
            i += 1
        elif c == "}":
            emit(Tok.RBRACE, c, i)
            i += 1
        elif c == '"':
            j = i + 1
            while j < n and data[j] not in '"\n':
                j += 1
            if j >= n or data[j] != '"':
                raise ScriptSyntaxError("unterminated-string", "unterminated quoted string",
                                        line, i - line_start + 1)
            emit(Tok.STRING, data[i + 1:j], i)
            i = j + 1
        else:
            j = i
            while j < n and not data[j].isspace() and data[j] not in '{}"' and not data.startswith("//", j):
                j += 1
            word = data[i:j]
            emit(Tok.NUMBER if _NUMBER.match(word) else Tok.WORD, word, i)
            i = j
    if toks and toks[-1].kind is Tok.NEWLINE:
        toks.pop()
    return toks


@dataclass
class ScriptBlock:
    keyword: str
    name: str | None = None
    modifiers: list[str] = field(default_factory=list)
    properties: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    children: list["ScriptBlock"] = field(default_factory=list)
    line: int = field(default=0, compare=False)

    def get(self, key, default=None):
        for k, v in self.properties:
            if k == key:
                return v
        return default

    def get_all(self, key):
        return [v for k, v in self.properties if k == key]

    def blocks(self, keyword):
        return [c for c in self.children if c.keyword == keyword]


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> Token | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def skip_newlines(self):
        while (t := self.peek()) is not None and t.kind is Tok.NEWLINE:
            self.pos += 1

    def statement(self, depth) -> tuple[str, object] | None:
        """Return ('block', ScriptBlock), ('prop', (key, values)) or None at '}'/EOF."""
        self.skip_newlines()
        t = self.peek()
        if t is None or t.kind is Tok.RBRACE:
            return None
        header: list[Token] = []
        while (t := self.peek()) is not None and t.kind not in (Tok.NEWLINE, Tok.LBRACE, Tok.RBRACE):
            header.append(t)
            self.pos += 1
        if not header:
            t = self.peek()
            raise ScriptSyntaxError("missing-keyword", "'{' without a block header", t.line, t.column)
        save = self.pos
        self.skip_newlines()
        t = self.peek()
        if t is not None and t.kind is Tok.LBRACE:
            self.pos += 1
            return "block", self.block_body(header, depth + 1)
        self.pos = save
        return "prop", (header[0].text, tuple(h.text for h in header[1:]))

    def block_body(self, header: list[Token], depth) -> ScriptBlock:
        head = header[0]
        if depth > MAX_DEPTH:
            raise ScriptSyntaxError("too-deep", "blocks nested too deeply", head.line, head.column)
        blk = ScriptBlock(head.text, header[1].text if len(header) > 1 else None,
                          [h.text for h in header[2:]], line=head.line)
        while True:
            st = self.statement(depth)
            if st is None:
                break
            kind, val = st
            if kind == "block":
                blk.children.append(val)
            else:
                blk.properties.append(val)
        t = self.peek()
        if t is None:
            raise ScriptSyntaxError("missing-brace", f"block {head.text!r} is not closed", head.line, head.column)
        self.pos += 1
        return blk


def parse_blocks(data: bytes | str) -> list[ScriptBlock]:
    p = _Parser(tokenize_script(data))
    out = []
    while True:
        st = p.statement(0)
        if st is None:
            t = p.peek()
            if t is not None:
                raise ScriptSyntaxError("unbalanced-brace", "unexpected '}'", t.line, t.column)
            return out
        kind, val = st
        if kind != "block":
            tok = p.toks[p.pos - 1] if p.pos else None
            line = tok.line if tok else None
            raise ScriptSyntaxError("expected-block", f"top-level statement {val[0]!r} is not a block", line)
        out.append(val)


def quote_token(text: str) -> str:
    if text == "" or any(ch.isspace() or ch in '{}"' for ch in text) or "//" in text or "/*" in text:
        if '"' in text or "\n" in text:
            raise ValueError(f"token {text!r} cannot be written")
        return f'"{text}"'
    return text


def serialize_block(blk: ScriptBlock, depth: int = 0) -> list[str]:
    pad = "    " * depth
    head = [quote_token(blk.keyword)]
    if blk.name is not None:
        head.append(quote_token(blk.name))
    head += [quote_token(m) for m in blk.modifiers]
    lines = [pad + " ".join(head) + " {"]
    for k, vals in blk.properties:
        lines.append(pad + "    " + " ".join([quote_token(k), *(quote_token(v) for v in vals)]))
    for c in blk.children:
        lines.extend(serialize_block(c, depth + 1))
    lines.append(pad + "}")
    return lines


def serialize_blocks(blocks) -> bytes:
    if not blocks:
        return b""
    chunks = ["\n".join(serialize_block(b)) for b in blocks]
    return ("\n\n".join(chunks) + "\n").encode("utf-8")
