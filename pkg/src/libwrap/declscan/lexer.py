"""Tokenizer for preprocessed C translation units.

Line markers (``# <line> "<file>"``) update the source position carried
on every token; all other directives surviving preprocessing (pragmas,
ident) are skipped.  Comments are tolerated so hand-written snippets can
be parsed directly in tests.
"""

from __future__ import annotations

import re
from typing import NamedTuple

from ..errors import ParseError

LINEMARKER_RE = re.compile(r'^\s*#\s*(\d+)\s+"((?:[^"\\]|\\.)*)"')

# Longest first so the regex alternation picks maximal munch.
_PUNCTUATION = [
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "*", "=", "+", "-", "/",
    "%", "<", ">", "&", "|", "^", "~", "!", "?", ".",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<id>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<num>(?:\.\d|\d)(?:[0-9a-fA-F'.xXbB]|[eEpP][+-]?|[uUlLfFwW])*)
  | (?P<str>L?"(?:[^"\\\n]|\\.)*")
  | (?P<chr>L?'(?:[^'\\\n]|\\.)*')
  | (?P<punct>%s)
    """
    % "|".join(re.escape(p) for p in _PUNCTUATION),
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str          # id | num | str | chr | punct | eof
    text: str
    file: str
    line: int


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    cur_file = filename
    cur_line = 1
    in_comment = False
    for raw in source.splitlines():
        line = raw
        if not in_comment:
            stripped = line.lstrip()
            if stripped.startswith("#"):
                m = LINEMARKER_RE.match(line)
                if m:
                    cur_line = int(m.group(1))
                    cur_file = m.group(2).encode().decode("unicode_escape")
                else:
                    cur_line += 1
                continue
        pos = 0
        end = len(line)
        while pos < end:
            if in_comment:
                close = line.find("*/", pos)
                if close < 0:
                    pos = end
                    continue
                pos = close + 2
                in_comment = False
                continue
            ch = line[pos]
            if ch in " \t\f\v\r":
                pos += 1
                continue
            if line.startswith("//", pos):
                break
            if line.startswith("/*", pos):
                in_comment = True
                pos += 2
                continue
            m = _TOKEN_RE.match(line, pos)
            if not m:
                raise ParseError(
                    f"unexpected character {line[pos]!r}", file=cur_file, line=cur_line
                )
            kind = m.lastgroup
            tokens.append(Token(kind, m.group(), cur_file, cur_line))
            pos = m.end()
        cur_line += 1
    tokens.append(Token("eof", "", cur_file, cur_line))
    return tokens


class TokenStream:
    """Cursor over a token list with single-token lookahead helpers."""

    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    @property
    def current(self) -> Token:
        return self._tokens[self._pos]

    def peek(self, offset: int = 1) -> Token:
        idx = min(self._pos + offset, len(self._tokens) - 1)
        return self._tokens[idx]

    def at(self, text: str) -> bool:
        return self.current.text == text and self.current.kind != "eof"

    def at_eof(self) -> bool:
        return self.current.kind == "eof"

    def advance(self) -> Token:
        tok = self.current
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.describe()}")
        return self.advance()

    def describe(self) -> str:
        tok = self.current
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def error(self, message: str) -> ParseError:
        tok = self.current
        return ParseError(message, file=tok.file, line=tok.line)

    def skip_balanced(self, open_text: str, close_text: str) -> None:
        """Skip a balanced bracket group starting at the current token."""
        self.expect(open_text)
        depth = 1
        while depth > 0:
            if self.at_eof():
                raise self.error(f"unterminated {open_text!r} group")
            tok = self.advance()
            if tok.text == open_text:
                depth += 1
            elif tok.text == close_text:
                depth -= 1
