"""Verify candidate functions against the target library's reality.

Header analysis rarely matches the library's symbol table exactly, so
before wrappers are generated every candidate is checked: is its symbol
actually defined by the target library, and does it resolve even
without the target (meaning it lives in a system library and probably
should not be wrapped)?  Two interchangeable modes exist: probe mode
compiles and links a one-function caller per candidate, exactly like
configure scripts do; symbol-table mode reads the library files
directly and is fast and hermetic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .objfile import SymbolTable, read_symbols
from .probe import probe_check

MISSING_LIST = "missing.txt"
RESOLVABLE_LIST = "resolvable_without_target.txt"


@dataclass
class SymbolReport:
    """Outcome of reconciling candidates with the target library."""

    missing: list[str] = field(default_factory=list)
    resolvable_without_target: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.missing = sorted(set(self.missing))
        self.resolvable_without_target = sorted(set(self.resolvable_without_target))
        overlap = set(self.missing) & set(self.resolvable_without_target)
        if overlap:
            raise ValueError(
                "a symbol cannot be both missing and resolvable: "
                + ", ".join(sorted(overlap))
            )

    @property
    def clean(self) -> bool:
        return not self.missing and not self.resolvable_without_target


def reconcile(candidates, tables, system_symbols=frozenset()) -> SymbolReport:
    """Symbol-table mode: candidates vs. the union of defined symbols.

    ``system_symbols`` plays the role of "links even without the target
    library"; it is empty by default and can be loaded from the host's
    system libraries when that check is wanted.
    """
    if not tables:
        raise ValueError("reconcile needs at least one symbol table")
    defined = set()
    for table in tables:
        defined |= table.defined
    names = [getattr(c, "name", c) for c in candidates]
    missing = [n for n in names if n not in defined and n not in system_symbols]
    resolvable = [n for n in names if n in system_symbols]
    return SymbolReport(missing=missing, resolvable_without_target=resolvable)


def write_report(directory, report: SymbolReport) -> tuple[str, str]:
    """Write the two reconciliation lists into the working directory."""
    paths = []
    for filename, names in (
        (MISSING_LIST, report.missing),
        (RESOLVABLE_LIST, report.resolvable_without_target),
    ):
        path = os.path.join(os.fspath(directory), filename)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("".join(name + "\n" for name in names))
        paths.append(path)
    return tuple(paths)


__all__ = [
    "SymbolTable",
    "SymbolReport",
    "read_symbols",
    "probe_check",
    "reconcile",
    "write_report",
    "MISSING_LIST",
    "RESOLVABLE_LIST",
]
