"""Structural model of C types with canonical rendering.

A :class:`TypeExpr` is a tree: scalars, struct/union/enum references and
typedef references at the leaves; pointers, arrays and function types as
inner nodes.  Rendering follows the C declarator grammar inside-out, so a
type can be printed either as an abstract type name (``int (*)(void)``)
or as a declarator for a concrete name (``int (*cb)(void)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

# Canonical qualifier order used everywhere a qualifier list is rendered.
QUALIFIER_ORDER = ("const", "volatile", "restrict")


class Param(NamedTuple):
    name: Optional[str]
    type: "TypeExpr"


@dataclass(frozen=True)
class TypeExpr:
    """One node of a C type tree.

    kind is one of ``scalar``, ``record``, ``typedef``, ``pointer``,
    ``function`` or ``array``; the payload fields used depend on it.
    ``quals`` holds the qualifiers that apply at this level (for a
    pointer node these are the qualifiers written after the ``*``).
    """

    kind: str
    name: Optional[str] = None          # scalar text, tag name, typedef name
    tag_kind: Optional[str] = None      # record: struct | union | enum
    pointee: Optional["TypeExpr"] = None
    elem: Optional["TypeExpr"] = None
    extent: Optional[int] = None
    ret: Optional["TypeExpr"] = None
    params: tuple[Param, ...] = ()
    variadic: bool = False
    quals: tuple[str, ...] = ()

    def __post_init__(self):
        # Qualifier order is semantically irrelevant in C; store it
        # canonically so structural equality ignores source order.
        ordered = tuple(_order_quals(self.quals))
        if ordered != self.quals:
            object.__setattr__(self, "quals", ordered)

    # -- constructors ------------------------------------------------

    @staticmethod
    def scalar(name: str, quals=()) -> "TypeExpr":
        return TypeExpr(kind="scalar", name=name, quals=tuple(quals))

    @staticmethod
    def record(tag_kind: str, name: Optional[str], quals=()) -> "TypeExpr":
        return TypeExpr(kind="record", tag_kind=tag_kind, name=name, quals=tuple(quals))

    @staticmethod
    def typedef(name: str, quals=()) -> "TypeExpr":
        return TypeExpr(kind="typedef", name=name, quals=tuple(quals))

    @staticmethod
    def pointer(pointee: "TypeExpr", quals=()) -> "TypeExpr":
        return TypeExpr(kind="pointer", pointee=pointee, quals=tuple(quals))

    @staticmethod
    def array(elem: "TypeExpr", extent: Optional[int] = None) -> "TypeExpr":
        return TypeExpr(kind="array", elem=elem, extent=extent)

    @staticmethod
    def function(ret: "TypeExpr", params, variadic: bool = False) -> "TypeExpr":
        return TypeExpr(kind="function", ret=ret, params=tuple(params), variadic=variadic)

    # -- rendering ---------------------------------------------------

    @property
    def canonical(self) -> str:
        """The type rendered as an abstract C type name."""
        return self.render_declarator("")

    def render_declarator(self, inner: str) -> str:
        """Wrap ``inner`` (a name, or "") in this type's declarator syntax."""
        t = self
        while True:
            if t.kind == "pointer":
                stars = "*"
                if t.quals:
                    stars += " " + " ".join(_order_quals(t.quals)) + (" " if inner else "")
                inner = stars + inner
                if t.pointee.kind in ("function", "array"):
                    inner = "(" + inner + ")"
                t = t.pointee
            elif t.kind == "array":
                ext = "" if t.extent is None else str(t.extent)
                inner = f"{inner}[{ext}]"
                t = t.elem
            elif t.kind == "function":
                inner = f"{inner}({_render_params(t.params, t.variadic)})"
                t = t.ret
            else:
                spec = t.specifier()
                return f"{spec} {inner}" if inner else spec

    def specifier(self) -> str:
        """The leading specifier text (qualifiers + base name)."""
        if self.kind == "scalar":
            base = self.name
        elif self.kind == "record":
            base = f"{self.tag_kind} {self.name or '<anonymous>'}"
        elif self.kind == "typedef":
            base = self.name
        else:
            raise ValueError(f"no specifier for {self.kind} type")
        quals = _order_quals(self.quals)
        return " ".join(list(quals) + [base])

    # -- structure helpers -------------------------------------------

    def decay(self) -> "TypeExpr":
        """Apply C parameter adjustment: arrays and functions become pointers."""
        if self.kind == "array":
            return TypeExpr.pointer(self.elem)
        if self.kind == "function":
            return TypeExpr.pointer(self)
        return self

    def named_leaves(self):
        """Yield (kind, tag_kind, name, by_value) for every named leaf type.

        ``by_value`` is True when the leaf is used directly (not behind a
        pointer), i.e. a complete type is required to restate the
        declaration.
        """
        return _named_leaves(self, by_value=True)


def _named_leaves(t: TypeExpr, by_value: bool):
    if t.kind in ("record", "typedef"):
        # Anonymous records yield name None so callers can diagnose them.
        yield (t.kind, t.tag_kind, t.name, by_value)
    elif t.kind == "pointer":
        yield from _named_leaves(t.pointee, by_value=False)
    elif t.kind == "array":
        yield from _named_leaves(t.elem, by_value=by_value)
    elif t.kind == "function":
        yield from _named_leaves(t.ret, by_value=True)
        for p in t.params:
            yield from _named_leaves(p.type, by_value=True)


def _order_quals(quals) -> list[str]:
    seen = set(quals)
    return [q for q in QUALIFIER_ORDER if q in seen]


def _render_params(params, variadic: bool) -> str:
    if not params and not variadic:
        return "void"
    parts = [p.type.render_declarator(p.name or "") for p in params]
    if variadic:
        parts.append("...")
    return ", ".join(parts)


# Multi-keyword scalar specifiers are normalized into one canonical
# spelling: sign first, then size, then the base (the implicit ``int``
# is dropped whenever a size keyword is present).
_BASES = {"void", "char", "int", "float", "double", "_Bool", "__int128",
          "_Float32", "_Float64", "_Float128", "_Float32x", "_Float64x"}
_SIGNS = {"signed", "unsigned"}
_SIZES = {"short", "long"}


def normalize_scalar(keywords: list[str]) -> str:
    """Collapse a list of type-specifier keywords into canonical form.

    >>> normalize_scalar(["long", "unsigned", "int"])
    'unsigned long'
    >>> normalize_scalar(["signed"])
    'int'
    """
    sign = None
    longs = 0
    short = False
    base = None
    complex_ = False
    for kw in keywords:
        if kw in _SIGNS:
            sign = kw
        elif kw == "long":
            longs += 1
        elif kw == "short":
            short = True
        elif kw == "_Complex":
            complex_ = True
        elif kw in _BASES:
            base = kw
        else:
            raise ValueError(f"unknown type keyword {kw!r}")
    if base is None:
        base = "int"
    parts = []
    if sign == "unsigned" or (sign == "signed" and base == "char"):
        parts.append(sign)
    if short:
        parts.append("short")
    elif longs:
        parts.append("long" if longs == 1 else "long long")
    if base != "int" or (not short and not longs):
        parts.append(base)
    if complex_:
        parts.append("_Complex")
    return " ".join(parts)
