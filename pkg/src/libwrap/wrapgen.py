"""Generate the wrapper artifacts from a verified wrap plan.

Two interception flavors are produced from the same plan.  The
link-time source defines ``__wrap_F`` for every planned function and
forwards to ``__real_F``; activating it means passing ``--wrap=F``
linker flags, which are listed in the ``.wrap`` manifest.  The runtime
source defines ``F`` itself and forwards to the original found through
the dynamic loader (next-occurrence lookup first, then an explicit load
of the configured target libraries).

Both flavors bracket the forwarded call with monitor enter/exit events.
A guard symbol defined by the link-time wrapper and probed by the
runtime wrapper keeps a call from being recorded twice when both
flavors end up in one process.

Also generated here: the call-everything link test, the per-function
link probes used by the symbol check, and the wrap-flag manifest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import filterset
from .declscan import FunctionDecl, Param, TypeExpr
from .declscan.analyze import warn_unwrappable
from .declscan.parser import strip_param_names
from .errors import LibwrapError, ValidationError

VA_LIST_NAMES = {"va_list", "__gnuc_va_list", "__builtin_va_list"}

_C_KEYWORDS = {
    "auto", "break", "case", "char", "const", "continue", "default", "do",
    "double", "else", "enum", "extern", "float", "for", "goto", "if",
    "inline", "int", "long", "register", "restrict", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "typedef", "union",
    "unsigned", "void", "volatile", "while",
}

MONITOR_DECLS = """\
extern int libwrap_region_register(const char *name, const char *file, int line);
extern void libwrap_enter(int id);
extern void libwrap_exit(int id);
"""


@dataclass
class WrapPlan:
    """The verified set of functions to wrap."""

    functions: list[FunctionDecl]
    ellipsis_mappings: dict[str, str] = field(default_factory=dict)
    variadic_is_void: set[str] = field(default_factory=set)
    wrapper_name: str = "wrapper"
    target_decls: dict[str, FunctionDecl] = field(default_factory=dict)
    libs: list[str] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for decl in self.functions:
            if decl.name in seen:
                raise ValidationError(f"duplicate function {decl.name!r} in plan")
            seen.add(decl.name)
            if decl.variadic and decl.name not in self.ellipsis_mappings:
                raise ValidationError(
                    f"variadic function {decl.name!r} has no ellipsis mapping"
                )
            if decl.empty_parens_unknown_args and decl.name not in self.variadic_is_void:
                raise ValidationError(
                    f"{decl.name!r} has an unknown argument list and is not "
                    "listed in variadic_is_void"
                )

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.functions]

    def guard_symbol(self) -> str:
        return "libwrap_linktime_guard_" + _c_ident(self.wrapper_name)


def build_plan(decls, filter_set, config, typedefs=None):
    """Filter the scanned declarations into a plan, collecting warnings.

    Returns ``(plan, warnings)``.  The configured ellipsis mappings and
    variadic-is-void entries are validated against the declarations
    before filtering, so a stale config entry fails loudly instead of
    silently changing the plan.
    """
    typedefs = typedefs or {}
    by_name = {d.name: d for d in decls}
    for fn, target in sorted(config.ellipsis_mappings.items()):
        if fn not in by_name:
            raise ValidationError(
                f"ellipsis mapping refers to unknown function {fn!r}"
            )
        if not by_name[fn].variadic:
            raise ValidationError(
                f"ellipsis mapping source {fn!r} is not variadic"
            )
        if target not in by_name:
            raise ValidationError(
                f"ellipsis mapping target {target!r} (for {fn!r}) is not declared"
            )
        tdecl = by_name[target]
        if not tdecl.params or not _is_va_list(tdecl.params[-1].type, typedefs):
            raise ValidationError(
                f"ellipsis mapping target {target!r} must take a va_list as "
                "its final parameter"
            )
        if len(tdecl.params) != len(by_name[fn].params) + 1:
            raise ValidationError(
                f"ellipsis mapping {fn!r} -> {target!r}: parameter lists do "
                f"not line up ({len(by_name[fn].params)} fixed + va_list vs "
                f"{len(tdecl.params)})"
            )
    for fn in sorted(config.variadic_is_void):
        if fn not in by_name:
            raise ValidationError(
                f"variadic_is_void refers to unknown function {fn!r}"
            )
        if not by_name[fn].empty_parens_unknown_args:
            raise ValidationError(
                f"variadic_is_void entry {fn!r} is declared with a known "
                "argument list; remove it from the configuration"
            )

    filtered = [d for d in decls if filterset.decide(filter_set, d)]
    warnings = warn_unwrappable(
        filtered, config.ellipsis_mappings, config.variadic_is_void
    )
    excluded = {w.function for w in warnings if w.excluded}
    functions = sorted(
        (d for d in filtered if d.name not in excluded),
        key=lambda d: (d.location.file, d.location.line, d.name),
    )
    planned = {d.name for d in functions}
    mappings = {f: v for f, v in config.ellipsis_mappings.items() if f in planned}
    plan = WrapPlan(
        functions=functions,
        ellipsis_mappings=mappings,
        variadic_is_void={n for n in config.variadic_is_void if n in planned},
        wrapper_name=config.name,
        target_decls={v: by_name[v] for v in mappings.values()},
        libs=list(config.libs),
    )
    return plan, warnings


def _is_va_list(t: TypeExpr, typedefs) -> bool:
    seen = set()
    while t.kind == "typedef":
        if t.name in VA_LIST_NAMES:
            return True
        if t.name in seen or t.name not in typedefs:
            return False
        seen.add(t.name)
        t = typedefs[t.name]
    if t.kind == "pointer" and t.pointee.kind == "record":
        return t.pointee.name == "__va_list_tag"
    return t.kind == "array" and t.elem.kind == "record" \
        and t.elem.name == "__va_list_tag"


# -- source generation -------------------------------------------------

def generate_linktime_source(plan: WrapPlan, header_name: str = "libwrap.h") -> str:
    """C source defining ``__wrap_F`` for every planned function."""
    out = [
        f"/* Link-time interception wrappers for '{plan.wrapper_name}'.",
        "   Generated; do not edit. */",
        "#include \"%s\"" % header_name,
        "#include <stdarg.h>",
        "",
        MONITOR_DECLS,
        f"int {plan.guard_symbol()} = 1;",
        "",
    ]
    for decl in plan.functions:
        out.append(_linktime_wrapper(decl, plan))
    return "\n".join(out)


def _linktime_wrapper(decl: FunctionDecl, plan: WrapPlan) -> str:
    _check_renderable(decl)
    params = _named_params(decl)
    lines = [f"/* {decl.location.file}:{decl.location.line} */"]
    mapped = plan.ellipsis_mappings.get(decl.name)
    if mapped is None:
        real = f"__real_{decl.name}"
        lines.append("extern " + _render_prototype(decl, real, params) + ";")
        call = f"{real}({', '.join(name for name, _ in params)})"
    else:
        target = plan.target_decls[mapped]
        if mapped in {d.name for d in plan.functions}:
            # The v-version is wrapped too; plain calls to it would be
            # rerouted by the wrap flags, so go through __real_.
            _check_renderable(target)
            vreal = f"__real_{mapped}"
            lines.append(
                "extern "
                + strip_param_names(target.type).render_declarator(vreal) + ";"
            )
        else:
            vreal = mapped  # declared by the umbrella header
        fixed = [name for name, _ in params]
        call = f"{vreal}({', '.join(fixed + ['libwrap_ap'])})"
    lines.append(_render_prototype(decl, f"__wrap_{decl.name}", params) + " {")
    lines += _wrapper_body(decl, call, variadic_mapped=mapped is not None,
                           last_fixed=params[-1][0] if params else None)
    lines.append("}")
    lines.append("")
    return "\n".join(lines)


def generate_runtime_source(plan: WrapPlan, header_name: str = "libwrap.h") -> str:
    """C source defining each planned function over dynamic lookup."""
    out = [
        f"/* Runtime interception wrappers for '{plan.wrapper_name}'.",
        "   Generated; do not edit. */",
        "#define _GNU_SOURCE 1",
        "#include \"%s\"" % header_name,
        "#include <dlfcn.h>",
        "#include <stdarg.h>",
        "#include <stdio.h>",
        "#include <stdlib.h>",
        "",
        MONITOR_DECLS,
    ]
    if not plan.functions:
        return "\n".join(out)
    candidates = _dlopen_candidates(plan)
    guard = plan.guard_symbol()
    out += [
        "static const char *const libwrap_dlopen_candidates[] = {",
        *[f'    "{c}",' for c in candidates],
        "    0",
        "};",
        "",
        f"extern int {guard} __attribute__((weak));",
        "",
        "static int libwrap_passthrough = -1;",
        "",
        "/* When the link-time wrapper is active in this process, forward",
        "   without recording so each call yields exactly one enter/exit. */",
        "static int libwrap_guard_active(void) {",
        "    if (libwrap_passthrough < 0)",
        f"        libwrap_passthrough = (&{guard} != 0)",
        f"            || (dlsym(RTLD_DEFAULT, \"{guard}\") != 0);",
        "    return libwrap_passthrough;",
        "}",
        "",
        "static void *libwrap_resolve(const char *name) {",
        "    void *addr = dlsym(RTLD_NEXT, name);",
        "    const char *const *lib;",
        "    for (lib = libwrap_dlopen_candidates; addr == 0 && *lib != 0; ++lib) {",
        "        void *handle = dlopen(*lib, RTLD_LAZY | RTLD_LOCAL);",
        "        if (handle != 0)",
        "            addr = dlsym(handle, name);",
        "    }",
        "    if (addr == 0) {",
        "        fprintf(stderr, \"libwrap: cannot resolve the original '%s' \"",
        "                \"via RTLD_NEXT or the configured libraries (\"",
        f"                {_c_string(', '.join(candidates) or '<none>')}",
        "                \")\\n\", name);",
        "        abort();",
        "    }",
        "    return addr;",
        "}",
        "",
    ]
    for decl in plan.functions:
        out.append(_runtime_wrapper(decl, plan))
    return "\n".join(out)


def _runtime_wrapper(decl: FunctionDecl, plan: WrapPlan) -> str:
    _check_renderable(decl)
    params = _named_params(decl)
    args = [name for name, _ in params]
    lines = [f"/* {decl.location.file}:{decl.location.line} */"]
    mapped = plan.ellipsis_mappings.get(decl.name)
    if mapped is None:
        orig = f"libwrap_orig_{decl.name}"
        fn_ptr = TypeExpr.pointer(strip_param_names(decl.type))
        lines.append(f"static {fn_ptr.render_declarator(orig)};")
        resolve_name = decl.name
        call = f"{orig}({', '.join(args)})"
    else:
        target = plan.target_decls[mapped]
        orig = f"libwrap_vorig_{decl.name}"
        fn_ptr = TypeExpr.pointer(strip_param_names(target.type))
        lines.append(f"static {fn_ptr.render_declarator(orig)};")
        resolve_name = mapped
        call = f"{orig}({', '.join(args + ['libwrap_ap'])})"
    lines.append(_render_prototype(decl, decl.name, params) + " {")
    lines += [
        f"    if ({orig} == 0)",
        f"        *(void **)(&{orig}) = libwrap_resolve(\"{resolve_name}\");",
    ]
    lines += _wrapper_body(
        decl, call, variadic_mapped=mapped is not None,
        last_fixed=params[-1][0] if params else None,
        guarded=True, orig=orig, args=args,
    )
    lines.append("}")
    lines.append("")
    return "\n".join(lines)


def _wrapper_body(decl, call, variadic_mapped, last_fixed,
                  guarded=False, orig=None, args=None) -> list[str]:
    """The enter/forward/exit body shared by both wrapper flavors."""
    is_void = decl.return_type.kind == "scalar" and decl.return_type.name == "void" \
        and not decl.return_type.quals
    ret_decl = decl.return_type.render_declarator("libwrap_result")
    lines = []
    if guarded:
        if variadic_mapped:
            lines += [
                "    if (libwrap_guard_active()) {",
                "        va_list libwrap_gap;",
                f"        va_start(libwrap_gap, {last_fixed});",
            ]
            gcall = call.replace("libwrap_ap", "libwrap_gap")
            if is_void:
                lines += [f"        {gcall};", "        va_end(libwrap_gap);",
                          "        return;"]
            else:
                lines += [f"        {ret_decl} = {gcall};",
                          "        va_end(libwrap_gap);",
                          "        return libwrap_result;"]
            lines.append("    }")
        else:
            direct = f"{orig}({', '.join(args)})"
            if is_void:
                lines += ["    if (libwrap_guard_active()) {",
                          f"        {direct};",
                          "        return;",
                          "    }"]
            else:
                lines.append(
                    f"    if (libwrap_guard_active())\n        return {direct};"
                )
    lines += [
        "    static int libwrap_region_id = -1;",
        "    if (libwrap_region_id < 0)",
        "        libwrap_region_id = libwrap_region_register("
        f"{_c_string(decl.name)}, {_c_string(decl.location.file)}, "
        f"{decl.location.line});",
        "    libwrap_enter(libwrap_region_id);",
    ]
    if variadic_mapped:
        lines += ["    va_list libwrap_ap;",
                  f"    va_start(libwrap_ap, {last_fixed});"]
    if is_void:
        lines.append(f"    {call};")
    else:
        lines.append(f"    {ret_decl} = {call};")
    if variadic_mapped:
        lines.append("    va_end(libwrap_ap);")
    lines.append("    libwrap_exit(libwrap_region_id);")
    if not is_void:
        lines.append("    return libwrap_result;")
    return lines


def generate_wrap_flags(plan: WrapPlan) -> tuple[list[str], str]:
    """Linker arguments plus the ``.wrap`` manifest text."""
    flags = [f"-Wl,--wrap={name}" for name in plan.names]
    manifest = "".join(name + "\n" for name in plan.names)
    return flags, manifest


def generate_call_all_example(plan: WrapPlan, header_name: str = "libwrap.h") -> str:
    """A never-executed program referencing every planned function.

    Linking it against the target library is the mismatch detector: an
    undefined reference here means a declared function has no symbol.
    """
    out = [
        f"/* Link test for '{plan.wrapper_name}': references every planned",
        "   function; the calls are never executed. */",
        "#include \"%s\"" % header_name,
        "",
        "static volatile int libwrap_run_guard = 0;",
        "",
        "int main(void) {",
        "    if (libwrap_run_guard) {",
    ]
    for decl in plan.functions:
        _check_renderable(decl)
        args = []
        block = ["        {"]
        for i, param in enumerate(decl.params, start=1):
            block.append(
                "            static "
                + param.type.render_declarator(f"libwrap_a{i}") + ";"
            )
            args.append(f"libwrap_a{i}")
        block.append(f"            (void){decl.name}({', '.join(args)});")
        block.append("        }")
        out += block
    out += ["    }", "    return 0;", "}", ""]
    return "\n".join(out)


def generate_probe_source(decl: FunctionDecl) -> str:
    """A standalone one-function link probe.

    The prototype is restated from the declaration itself with stub
    definitions for any named record or typedef, so the unit compiles
    with no headers at all; only the link step can fail, and that is the
    signal.
    """
    _check_renderable(decl)
    out = [f"/* Link probe for '{decl.name}'; never executed. */"]
    out += _stub_types(decl)
    stripped = strip_param_names(decl.type)
    if decl.empty_parens_unknown_args:
        out.append("extern " + decl.return_type.render_declarator(f"{decl.name}()") + ";")
    else:
        out.append("extern " + stripped.render_declarator(decl.name) + ";")
    out += ["", "int main(void) {"]
    args = []
    for i, param in enumerate(decl.params, start=1):
        out.append("    static " + param.type.render_declarator(f"libwrap_a{i}") + ";")
        args.append(f"libwrap_a{i}")
    out.append(f"    (void){decl.name}({', '.join(args)});")
    out += ["    return 0;", "}", ""]
    return "\n".join(out)


def _stub_types(decl: FunctionDecl) -> list[str]:
    """Stub definitions for every named leaf type in the signature.

    Layout compatibility is irrelevant: probe binaries are linked, never
    run, so a dummy complete type suffices even for by-value uses.
    """
    complete: dict[tuple, bool] = {}
    for kind, tag_kind, name, by_value in decl.type.named_leaves():
        key = (kind, tag_kind, name)
        complete[key] = complete.get(key, False) or by_value
    lines = []
    for (kind, tag_kind, name), by_value in complete.items():
        if kind == "typedef":
            if name == "__builtin_va_list":
                continue
            if name in VA_LIST_NAMES:
                lines.append(f"typedef __builtin_va_list {name};")
            elif by_value:
                lines.append(
                    f"typedef struct libwrap_stub_{name} "
                    f"{{ char libwrap_dummy; }} {name};"
                )
            else:
                lines.append(f"typedef struct libwrap_stub_{name} {name};")
        elif tag_kind == "enum":
            lines.append(f"enum {name} {{ libwrap_stub_{name}_zero }};")
        elif by_value:
            lines.append(f"{tag_kind} {name} {{ char libwrap_dummy; }};")
        else:
            lines.append(f"{tag_kind} {name};")
    return lines


# -- helpers -----------------------------------------------------------

def _named_params(decl: FunctionDecl) -> list[tuple[str, TypeExpr]]:
    """Parameter names safe to use in generated code."""
    named = []
    seen = set()
    for i, param in enumerate(decl.params, start=1):
        name = param.name
        if (not name or name.startswith("libwrap_") or name in _C_KEYWORDS
                or name in seen):
            name = f"libwrap_a{i}"
        seen.add(name)
        named.append((name, param.type))
    return named


def _render_prototype(decl: FunctionDecl, symbol: str, params) -> str:
    t = TypeExpr.function(
        decl.return_type,
        [Param(name, ptype) for name, ptype in params],
        decl.variadic,
    )
    return t.render_declarator(symbol)


def _check_renderable(decl: FunctionDecl) -> None:
    for kind, tag_kind, name, _ in decl.type.named_leaves():
        if name is None:
            raise LibwrapError(
                f"cannot generate a wrapper for {decl.name!r}: its signature "
                f"uses an anonymous {tag_kind or kind} type that cannot be "
                "restated in C"
            )


def _dlopen_candidates(plan: WrapPlan) -> list[str]:
    """Shared-object names to try when next-occurrence lookup fails.

    Derived from the configured link libraries, in their configured
    order: ``-lfoo`` becomes ``libfoo.so``; explicit shared-object paths
    are kept; archives and other linker flags cannot be dlopened.
    """
    candidates = []
    for lib in plan.libs:
        if lib.startswith("-l") and len(lib) > 2:
            candidates.append(f"lib{lib[2:]}.so")
        elif not lib.startswith("-") and ".so" in lib:
            candidates.append(lib)
    return candidates


def _c_ident(name: str) -> str:
    return "".join(c if c.isalnum() or c == "_" else "_" for c in name)


def _c_string(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'
