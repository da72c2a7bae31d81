"""Include/exclude filtering of scanned declarations.

The filter file is a line-oriented list of rules.  ``FILES:`` and
``FUNCTIONS:`` section headers switch the rule domain (files is the
default); each rule line is ``INCLUDE <glob>`` or ``EXCLUDE <glob>``.
Evaluation is order-dependent: per domain the last matching rule wins.
When no file rule matches, a declaration is kept only if it lives under
one of the ``-I`` include directories; without that default the plan
would initially contain every function from every system header.

The FUNCTIONS section is an extension over the plain file-pattern
filter; see the format notes in the generated working-directory README.
"""

from __future__ import annotations

import posixpath
import re
from dataclasses import dataclass, field

from .errors import ParseError


@dataclass(frozen=True)
class FilterRule:
    action: str      # include | exclude
    domain: str      # files | functions
    pattern: str

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("filter pattern must be non-empty")
        if self.action not in ("include", "exclude"):
            raise ValueError(f"bad action {self.action!r}")
        if self.domain not in ("files", "functions"):
            raise ValueError(f"bad domain {self.domain!r}")


@dataclass
class FilterSet:
    rules: list[FilterRule] = field(default_factory=list)
    default_include_dirs: list[str] = field(default_factory=list)

    def decide(self, decl) -> bool:
        return decide(self, decl)


def parse_filter(text: str) -> list[FilterRule]:
    """Parse filter-file text into an ordered rule list."""
    rules = []
    domain = "files"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        upper = line.upper()
        if upper in ("FILES:", "FUNCTIONS:"):
            domain = upper[:-1].lower()
            continue
        parts = line.split(None, 1)
        keyword = parts[0].upper()
        if keyword not in ("INCLUDE", "EXCLUDE"):
            raise ParseError(
                f"unknown filter keyword {parts[0]!r} "
                "(expected INCLUDE, EXCLUDE, FILES: or FUNCTIONS:)",
                line=lineno,
            )
        if len(parts) < 2 or not parts[1].strip():
            raise ParseError(f"{keyword} needs a pattern", line=lineno)
        rules.append(FilterRule(keyword.lower(), domain, parts[1].strip()))
    return rules


def decide(filter_set: FilterSet, decl) -> bool:
    """Should ``decl`` be wrapped?  File verdict AND function verdict."""
    path = posixpath.normpath(decl.location.file)
    file_verdict = None
    func_verdict = None
    for rule in filter_set.rules:
        if rule.domain == "files":
            if glob_match(rule.pattern, path):
                file_verdict = rule.action == "include"
        else:
            if glob_match(rule.pattern, decl.name):
                func_verdict = rule.action == "include"
    if file_verdict is None:
        file_verdict = _under_any(path, filter_set.default_include_dirs)
    if func_verdict is None:
        func_verdict = True
    return file_verdict and func_verdict


def suggest_exclusions(report) -> str:
    """A filter fragment excluding everything the reconciliation flagged."""
    names = list(report.missing) + list(report.resolvable_without_target)
    if not names:
        return ""
    lines = ["FUNCTIONS:"]
    lines += [f"EXCLUDE {name}" for name in names]
    return "\n".join(lines) + "\n"


def include_dirs_from_flags(flags) -> list[str]:
    """Directories named by ``-I`` flags (both joined and split forms)."""
    dirs = []
    it = iter(flags)
    for flag in it:
        if flag == "-I":
            nxt = next(it, None)
            if nxt:
                dirs.append(posixpath.normpath(nxt))
        elif flag.startswith("-I") and len(flag) > 2:
            dirs.append(posixpath.normpath(flag[2:]))
    return dirs


def _under_any(path: str, dirs) -> bool:
    for d in dirs:
        d = posixpath.normpath(d)
        if path == d or path.startswith(d.rstrip("/") + "/"):
            return True
    return False


# -- glob matching ----------------------------------------------------
#
# Shell-style globs: `*` (any run, including separators), `?` (any one
# character), `[...]` classes with ranges and `!`/`^` negation.  Matching
# is implemented directly so tests can check it against an independent
# regex-translation oracle.

def glob_match(pattern: str, text: str) -> bool:
    return _match(pattern, 0, text, 0)


def _match(pat: str, pi: int, text: str, ti: int) -> bool:
    star_pi = star_ti = -1
    np, nt = len(pat), len(text)
    while ti < nt:
        if pi < np:
            ch = pat[pi]
            if ch == "*":
                star_pi, star_ti = pi, ti
                pi += 1
                continue
            if ch == "?":
                pi += 1
                ti += 1
                continue
            if ch == "[":
                matched, next_pi = _match_class(pat, pi, text[ti])
                if next_pi is not None and matched:
                    pi = next_pi
                    ti += 1
                    continue
                if next_pi is None and ch == text[ti]:
                    # Unterminated class: treat '[' literally.
                    pi += 1
                    ti += 1
                    continue
            elif ch == text[ti]:
                pi += 1
                ti += 1
                continue
        if star_pi >= 0:
            star_ti += 1
            pi, ti = star_pi + 1, star_ti
            continue
        return False
    while pi < np and pat[pi] == "*":
        pi += 1
    return pi == np


def _match_class(pat: str, pi: int, ch: str):
    """Match ``ch`` against the class starting at ``pat[pi] == '['``.

    Returns (matched, index-after-class); index is None when the class
    is unterminated.
    """
    i = pi + 1
    negate = False
    if i < len(pat) and pat[i] in "!^":
        negate = True
        i += 1
    first = True
    matched = False
    while i < len(pat):
        if pat[i] == "]" and not first:
            return (matched != negate), i + 1
        first = False
        if i + 2 < len(pat) and pat[i + 1] == "-" and pat[i + 2] != "]":
            if pat[i] <= ch <= pat[i + 2]:
                matched = True
            i += 3
        else:
            if pat[i] == ch:
                matched = True
            i += 1
    return False, None


def glob_to_regex(pattern: str) -> str:
    """Regex equivalent of a glob; the independent oracle used in tests."""
    out = []
    i = 0
    n = len(pattern)
    while i < n:
        ch = pattern[i]
        if ch == "*":
            out.append(".*")
        elif ch == "?":
            out.append(".")
        elif ch == "[":
            j = i + 1
            if j < n and pattern[j] in "!^":
                j += 1
            if j < n and pattern[j] == "]":
                j += 1
            while j < n and pattern[j] != "]":
                j += 1
            if j >= n:
                out.append(re.escape("["))
            else:
                body = pattern[i + 1:j]
                negate = body.startswith(("!", "^"))
                if negate:
                    body = body[1:]
                out.append(_class_to_regex(body, negate))
                i = j
        else:
            out.append(re.escape(ch))
        i += 1
    return "(?s:" + "".join(out) + r")\Z"


def _class_to_regex(body: str, negate: bool) -> str:
    """Character class as regex, mirroring the matcher's semantics.

    Reverse ranges (``[b-a]``) never match a character, so they are
    dropped; a class left empty matches nothing (negated: any one char).
    """
    parts = []
    i = 0
    while i < len(body):
        if i + 2 < len(body) and body[i + 1] == "-" and body[i + 2] != "]":
            if body[i] <= body[i + 2]:
                parts.append(re.escape(body[i]) + "-" + re.escape(body[i + 2]))
            i += 3
        else:
            parts.append(re.escape(body[i]))
            i += 1
    if not parts:
        return "." if negate else "(?!)"
    return "[" + ("^" if negate else "") + "".join(parts) + "]"
