"""Recursive-descent parser extracting function declarations from
preprocessed C.

The grammar covers C99 declarations as they appear in real system
headers after preprocessing: GNU ``__attribute__`` lists are skipped,
``__extension__`` is ignored, struct/union/enum bodies and function
bodies are passed over with balanced-brace skipping.  Typedef names are
tracked so later declarations can use them as type specifiers.

Deliberate rejections (diagnosed, never guessed): K&R-style parameter
lists, ``asm`` symbol renames attached to declarators, and ``_Atomic``.
An inner function type written with empty parentheses is folded to
``(void)``; such parameters are only ever forwarded, never called.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

from ..errors import ParseError
from .lexer import Token, TokenStream, tokenize
from .typeexpr import Param, TypeExpr, normalize_scalar

_STORAGE = {"typedef", "extern", "static", "auto", "register",
            "_Thread_local", "__thread"}
_INLINE = {"inline", "__inline", "__inline__"}
_IGNORED = {"_Noreturn", "__extension__"}
_QUAL_ALIASES = {
    "const": "const", "__const": "const", "__const__": "const",
    "volatile": "volatile", "__volatile": "volatile", "__volatile__": "volatile",
    "restrict": "restrict", "__restrict": "restrict", "__restrict__": "restrict",
}
_TYPE_KEYWORD_ALIASES = {
    "void": "void", "char": "char", "short": "short", "int": "int",
    "long": "long", "float": "float", "double": "double",
    "signed": "signed", "__signed": "signed", "__signed__": "signed",
    "unsigned": "unsigned", "_Bool": "_Bool", "_Complex": "_Complex",
    "__complex__": "_Complex", "__int128": "__int128",
    "_Float32": "_Float32", "_Float64": "_Float64", "_Float128": "_Float128",
    "_Float32x": "_Float32x", "_Float64x": "_Float64x",
}
_ATTRIBUTE_KEYWORDS = {"__attribute__", "__attribute"}
_ASM_KEYWORDS = {"asm", "__asm", "__asm__"}

# Compiler-provided type names that never appear in a typedef we can see.
_BUILTIN_TYPEDEFS = ("__builtin_va_list",)


class Location(NamedTuple):
    file: str
    line: int


@dataclass
class FunctionDecl:
    """One external C function declaration."""

    name: str
    return_type: TypeExpr
    params: tuple[Param, ...]
    variadic: bool = False
    empty_parens_unknown_args: bool = False
    is_inline_or_static: bool = False
    location: Location = Location("<unknown>", 0)

    def __post_init__(self):
        if self.variadic and not self.params:
            raise ParseError(
                f"variadic function {self.name!r} needs at least one fixed parameter",
                file=self.location.file, line=self.location.line,
            )
        if self.empty_parens_unknown_args and (self.params or self.variadic):
            raise ValueError("empty_parens_unknown_args excludes parameters")

    @property
    def type(self) -> TypeExpr:
        return TypeExpr.function(self.return_type, self.params, self.variadic)

    def prototype(self, name: Optional[str] = None) -> str:
        """Render as a compilable C prototype (no trailing semicolon)."""
        if self.empty_parens_unknown_args:
            return self.return_type.render_declarator(f"{name or self.name}()")
        return self.type.render_declarator(name or self.name)

    def signature_key(self):
        """Structural signature ignoring parameter names."""
        return (
            strip_param_names(self.return_type),
            tuple(strip_param_names(p.type) for p in self.params),
            self.variadic,
            self.empty_parens_unknown_args,
        )


def strip_param_names(t: TypeExpr) -> TypeExpr:
    if t.kind == "pointer":
        return replace(t, pointee=strip_param_names(t.pointee))
    if t.kind == "array":
        return replace(t, elem=strip_param_names(t.elem))
    if t.kind == "function":
        return replace(
            t,
            ret=strip_param_names(t.ret),
            params=tuple(Param(None, strip_param_names(p.type)) for p in t.params),
        )
    return t


@dataclass
class ScanResult:
    decls: list[FunctionDecl] = field(default_factory=list)
    typedefs: dict[str, TypeExpr] = field(default_factory=dict)

    def resolve_typedef(self, t: TypeExpr) -> TypeExpr:
        """Follow typedef references to the underlying type."""
        seen = set()
        while t.kind == "typedef" and t.name in self.typedefs:
            if t.name in seen:
                break
            seen.add(t.name)
            t = self.typedefs[t.name]
        return t


# Declarator modifiers collected tightest-binding-first.
class _FuncMod(NamedTuple):
    params: tuple[Param, ...]
    variadic: bool
    unknown: bool


class _ArrayMod(NamedTuple):
    extent: Optional[int]


class _PtrMod(NamedTuple):
    quals: tuple[str, ...]


class _SpecInfo(NamedTuple):
    base: TypeExpr
    is_typedef: bool
    is_inline_or_static: bool


class _Parser:
    def __init__(self, tokens: list[Token], extra_typedefs=()):
        self.ts = TokenStream(tokens)
        self.result = ScanResult()
        self.typedef_names = set(_BUILTIN_TYPEDEFS) | set(extra_typedefs)
        self._by_name: dict[str, FunctionDecl] = {}

    # -- top level -----------------------------------------------------

    def parse_translation_unit(self) -> ScanResult:
        ts = self.ts
        while not ts.at_eof():
            if ts.at(";"):
                ts.advance()
            elif ts.current.text in _ATTRIBUTE_KEYWORDS:
                self._skip_attributes()
            elif ts.at("_Static_assert"):
                ts.advance()
                ts.skip_balanced("(", ")")
                if ts.at(";"):
                    ts.advance()
            elif ts.current.text in _ASM_KEYWORDS:
                # File-scope asm statement; harmless for declarations.
                ts.advance()
                ts.skip_balanced("(", ")")
                if ts.at(";"):
                    ts.advance()
            else:
                self._parse_declaration()
        self.result.decls = list(self._by_name.values())
        return self.result

    # -- declarations ---------------------------------------------------

    def _parse_declaration(self) -> None:
        spec = self._parse_specifiers()
        ts = self.ts
        if ts.at(";"):  # bare struct/union/enum declaration
            ts.advance()
            return
        first = True
        while True:
            name, dtype, unknown, loc = self._parse_declarator(spec.base)
            self._skip_attributes()
            if self.ts.current.text in _ASM_KEYWORDS:
                raise self.ts.error(
                    "asm symbol renames on declarations are not supported"
                )
            self._skip_attributes()
            if first and ts.at("{"):
                ts.skip_balanced("{", "}")
                self._record(spec, name, dtype, unknown, loc)
                return
            if ts.at("="):
                ts.advance()
                self._skip_initializer()
            self._record(spec, name, dtype, unknown, loc)
            if ts.at(","):
                ts.advance()
                first = False
                continue
            ts.expect(";")
            return

    def _record(self, spec: _SpecInfo, name, dtype, unknown, loc) -> None:
        if name is None:
            raise self.ts.error("declaration is missing a name")
        if spec.is_typedef:
            self.typedef_names.add(name)
            self.result.typedefs[name] = dtype
            return
        resolved = dtype
        if resolved.kind == "typedef":
            resolved = self.result.resolve_typedef(resolved)
        if resolved.kind != "function":
            return  # variable declaration
        decl = FunctionDecl(
            name=name,
            return_type=resolved.ret,
            params=() if unknown else resolved.params,
            variadic=resolved.variadic,
            empty_parens_unknown_args=unknown,
            is_inline_or_static=spec.is_inline_or_static,
            location=loc,
        )
        self._merge(decl)

    def _merge(self, decl: FunctionDecl) -> None:
        old = self._by_name.get(decl.name)
        if old is None:
            self._by_name[decl.name] = decl
            return
        inline = old.is_inline_or_static or decl.is_inline_or_static
        if old.signature_key() == decl.signature_key():
            old.is_inline_or_static = inline
            return
        # An unknown-argument declaration is compatible with a full
        # prototype; keep the richer one.
        if old.empty_parens_unknown_args and _returns_match(old, decl):
            decl.is_inline_or_static = inline
            decl.location = old.location
            self._by_name[decl.name] = decl
            return
        if decl.empty_parens_unknown_args and _returns_match(old, decl):
            old.is_inline_or_static = inline
            return
        raise ParseError(
            f"incompatible redeclaration of {decl.name!r} "
            f"(first declared at {old.location.file}:{old.location.line})",
            file=decl.location.file, line=decl.location.line,
        )

    # -- specifiers -------------------------------------------------------

    def _parse_specifiers(self) -> _SpecInfo:
        ts = self.ts
        quals: list[str] = []
        keywords: list[str] = []
        base: Optional[TypeExpr] = None
        is_typedef = False
        inline_or_static = False
        while True:
            self._skip_attributes()
            tok = ts.current
            if tok.kind != "id":
                break
            text = tok.text
            if text in _STORAGE:
                if text == "typedef":
                    is_typedef = True
                elif text == "static":
                    inline_or_static = True
                ts.advance()
            elif text in _INLINE:
                inline_or_static = True
                ts.advance()
            elif text in _IGNORED:
                ts.advance()
            elif text == "_Alignas":
                ts.advance()
                ts.skip_balanced("(", ")")
            elif text in _QUAL_ALIASES:
                quals.append(_QUAL_ALIASES[text])
                ts.advance()
            elif text in _TYPE_KEYWORD_ALIASES:
                keywords.append(_TYPE_KEYWORD_ALIASES[text])
                ts.advance()
            elif text in ("struct", "union", "enum"):
                if base is not None or keywords:
                    raise ts.error(f"unexpected {text!r} after type specifier")
                base = self._parse_record(text)
            elif text == "_Atomic":
                raise ts.error("_Atomic is not supported")
            elif text in ("typeof", "__typeof__", "__typeof"):
                raise ts.error(f"{text} is not supported in declarations")
            elif text in self.typedef_names and base is None and not keywords:
                base = TypeExpr.typedef(text)
                ts.advance()
            else:
                break
        if base is not None and keywords:
            raise ts.error("conflicting type specifiers")
        if base is None:
            if not keywords:
                raise ts.error(
                    f"missing type specifier before {ts.describe()}"
                )
            base = TypeExpr.scalar(normalize_scalar(keywords))
        if quals:
            merged = tuple(dict.fromkeys(list(base.quals) + quals))
            base = replace(base, quals=merged)
        return _SpecInfo(base, is_typedef, inline_or_static)

    def _parse_record(self, tag_kind: str) -> TypeExpr:
        ts = self.ts
        ts.advance()
        self._skip_attributes()
        tag = None
        if ts.current.kind == "id" and not ts.at("{"):
            tag = ts.advance().text
        self._skip_attributes()
        if ts.at("{"):
            ts.skip_balanced("{", "}")
            self._skip_attributes()
        return TypeExpr.record(tag_kind, tag)

    # -- declarators ------------------------------------------------------

    def _parse_declarator(self, base: TypeExpr):
        """Returns (name, full type, unknown_args_flag, location)."""
        name, mods, loc = self._parse_declarator_mods()
        unknown = bool(mods) and isinstance(mods[0], _FuncMod) and mods[0].unknown
        dtype = base
        for mod in reversed(mods):
            if isinstance(mod, _PtrMod):
                dtype = TypeExpr.pointer(dtype, quals=mod.quals)
            elif isinstance(mod, _ArrayMod):
                dtype = TypeExpr.array(dtype, extent=mod.extent)
            else:
                dtype = TypeExpr.function(dtype, mod.params, mod.variadic)
        if loc is None:
            tok = self.ts.current
            loc = Location(tok.file, tok.line)
        return name, dtype, unknown, loc

    def _parse_declarator_mods(self):
        ts = self.ts
        ptrs: list[_PtrMod] = []
        while True:
            self._skip_attributes()
            if not ts.at("*"):
                break
            ts.advance()
            quals = []
            while ts.current.text in _QUAL_ALIASES or ts.current.text in _IGNORED:
                if ts.current.text in _QUAL_ALIASES:
                    quals.append(_QUAL_ALIASES[ts.current.text])
                ts.advance()
            ptrs.append(_PtrMod(tuple(dict.fromkeys(quals))))
        self._skip_attributes()
        name = None
        loc = None
        inner_mods: list = []
        if ts.at("(") and self._paren_is_grouping():
            ts.advance()
            name, inner_mods, loc = self._parse_declarator_mods()
            ts.expect(")")
        elif ts.current.kind == "id" and ts.current.text not in _ASM_KEYWORDS:
            tok = ts.advance()
            name = tok.text
            loc = Location(tok.file, tok.line)
        suffix_mods: list = []
        while True:
            self._skip_attributes()
            if ts.at("("):
                suffix_mods.append(self._parse_param_list())
            elif ts.at("["):
                suffix_mods.append(self._parse_array_suffix())
            else:
                break
        mods = inner_mods + suffix_mods + list(reversed(ptrs))
        return name, mods, loc

    def _paren_is_grouping(self) -> bool:
        nxt = self.ts.peek()
        if nxt.text in ("*", "(", "^"):
            return True
        if nxt.kind != "id":
            return False
        text = nxt.text
        if (text in _STORAGE or text in _QUAL_ALIASES or text in _TYPE_KEYWORD_ALIASES
                or text in ("struct", "union", "enum", "_Atomic")
                or text in _ATTRIBUTE_KEYWORDS or text in _IGNORED
                or text in self.typedef_names):
            return False
        return True  # plain identifier: parenthesized declarator name

    def _parse_param_list(self) -> _FuncMod:
        ts = self.ts
        ts.expect("(")
        if ts.at(")"):
            ts.advance()
            return _FuncMod((), False, True)
        if ts.at("void") and ts.peek().text == ")":
            ts.advance()
            ts.advance()
            return _FuncMod((), False, False)
        params: list[Param] = []
        variadic = False
        while True:
            self._skip_attributes()
            if ts.at("..."):
                if not params:
                    raise ts.error("a parameter list cannot start with '...'")
                ts.advance()
                variadic = True
                ts.expect(")")
                break
            if ts.current.kind == "id" and not self._starts_type():
                raise ts.error(
                    f"K&R-style parameter list is not supported "
                    f"(parameter {ts.current.text!r} has no type)"
                )
            spec = self._parse_specifiers()
            pname, ptype, _, _ = self._parse_declarator(spec.base)
            params.append(Param(pname, ptype.decay()))
            if ts.at(","):
                ts.advance()
                continue
            ts.expect(")")
            break
        return _FuncMod(tuple(params), variadic, False)

    def _starts_type(self) -> bool:
        text = self.ts.current.text
        return (text in _STORAGE or text in _QUAL_ALIASES
                or text in _TYPE_KEYWORD_ALIASES or text in _IGNORED
                or text in ("struct", "union", "enum", "_Alignas", "_Atomic")
                or text in _ATTRIBUTE_KEYWORDS
                or text in self.typedef_names)

    def _parse_array_suffix(self) -> _ArrayMod:
        ts = self.ts
        open_tok = ts.expect("[")
        # Qualifiers and `static` may appear in array parameter declarators.
        while ts.current.text in _QUAL_ALIASES or ts.at("static"):
            ts.advance()
        if ts.at("]"):
            ts.advance()
            return _ArrayMod(None)
        extent = None
        if ts.current.kind == "num" and ts.peek().text == "]":
            try:
                extent = int(ts.current.text.rstrip("uUlL"), 0)
            except ValueError:
                extent = None
            ts.advance()
            ts.advance()
            return _ArrayMod(extent)
        # Arbitrary constant expression: skip to the matching bracket.
        depth = 1
        while depth > 0:
            if ts.at_eof():
                raise ParseError(
                    "unterminated array extent", file=open_tok.file, line=open_tok.line
                )
            tok = ts.advance()
            if tok.text == "[":
                depth += 1
            elif tok.text == "]":
                depth -= 1
        return _ArrayMod(None)

    # -- skipping -----------------------------------------------------------

    def _skip_attributes(self) -> None:
        ts = self.ts
        while True:
            if ts.current.text in _ATTRIBUTE_KEYWORDS:
                ts.advance()
                ts.skip_balanced("(", ")")
            elif ts.current.text in _IGNORED:
                ts.advance()
            else:
                return

    def _skip_initializer(self) -> None:
        ts = self.ts
        depth = 0
        while True:
            if ts.at_eof():
                raise ts.error("unterminated initializer")
            text = ts.current.text
            if depth == 0 and text in (",", ";"):
                return
            ts.advance()
            if text in ("(", "[", "{"):
                depth += 1
            elif text in (")", "]", "}"):
                depth -= 1


def _returns_match(a: FunctionDecl, b: FunctionDecl) -> bool:
    return strip_param_names(a.return_type) == strip_param_names(b.return_type)


def scan_text(source: str, filename: str = "<input>", extra_typedefs=()) -> ScanResult:
    """Parse a preprocessed C translation unit.

    ``extra_typedefs`` pre-seeds the typedef table for snippets whose
    typedef declarations are not part of the text.
    """
    parser = _Parser(tokenize(source, filename), extra_typedefs=extra_typedefs)
    return parser.parse_translation_unit()


def parse_declarations(source: str, filename: str = "<input>",
                       extra_typedefs=()) -> list[FunctionDecl]:
    """All external function declarations of a preprocessed C unit, in order."""
    return scan_text(source, filename, extra_typedefs=extra_typedefs).decls
