"""Command-line front end: one subcommand per workflow step.

init -> (edit header and example) -> build -> [check -> adjust filter ->
build] -> install -> installcheck -> link.  Every subprocess the toolkit
spawns can be shown with --print-commands.  Exit codes: 0 success,
1 stage failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import importlib.resources
import os
import shlex
import shutil
import subprocess
import sys
from dataclasses import dataclass

from . import config as cfg
from . import filterset, report, wrapgen
from .declscan import scan_text, preprocess
from .errors import LibwrapError, ToolchainError
from .symreconcile import probe_check, read_symbols, reconcile, write_report
from .toolchain import Toolchain

SEARCH_PATH_ENV = "LIBWRAP_PATH"
MONITOR_SOURCE_ENV = "LIBWRAP_MONITOR_SOURCE"
PROGRESS_NOTICE_THRESHOLD = 100

VARIANTS = ("linktime-static", "linktime-shared", "runtime-static", "runtime-shared")


# -- installed wrappers -------------------------------------------------

@dataclass
class InstalledWrapper:
    name: str
    path: str
    config: cfg.WrapperConfig
    variants: list[str]
    manifest: str

    def library(self, variant: str) -> str:
        method, kind = variant.split("-")
        ext = "a" if kind == "static" else "so"
        return os.path.join(self.path, f"libwrap_{self.name}_{method}.{ext}")


def _variant_filenames(name: str) -> dict[str, str]:
    return {
        "linktime-static": f"libwrap_{name}_linktime.a",
        "linktime-shared": f"libwrap_{name}_linktime.so",
        "runtime-static": f"libwrap_{name}_runtime.a",
        "runtime-shared": f"libwrap_{name}_runtime.so",
    }


def search_dirs(extra=()) -> list[str]:
    dirs = [os.path.abspath(d) for d in extra]
    env = os.environ.get(SEARCH_PATH_ENV, "")
    dirs += [os.path.abspath(d) for d in env.split(":") if d]
    dirs.append(os.path.expanduser(cfg.DEFAULT_INSTALL_PREFIX))
    return list(dict.fromkeys(dirs))


def find_wrapper(name: str, dirs) -> InstalledWrapper:
    for d in dirs:
        root = os.path.join(d, name)
        conf = os.path.join(root, cfg.CONFIG_FILE)
        if not os.path.exists(conf):
            continue
        with open(conf, encoding="utf-8") as fh:
            wrapper_config = cfg.parse_config(fh.read())
        variants = [
            v for v, fn in _variant_filenames(name).items()
            if os.path.exists(os.path.join(root, fn))
        ]
        manifest = os.path.join(root, f"{name}.wrap")
        if not variants:
            continue
        if any(v.startswith("linktime") for v in variants) and not os.path.exists(manifest):
            raise LibwrapError(
                f"wrapper {name!r} at {root} has link-time variants but no "
                f"{name}.wrap manifest; reinstall it"
            )
        return InstalledWrapper(name, root, wrapper_config, variants, manifest)
    available = sorted(w.name for w in list_wrappers(dirs))
    listing = ", ".join(available) if available else "none"
    raise LibwrapError(
        f"no installed wrapper named {name!r} (searched "
        + ", ".join(dirs) + f"; available: {listing})"
    )


def list_wrappers(dirs) -> list[InstalledWrapper]:
    found = {}
    for d in dirs:
        if not os.path.isdir(d):
            continue
        for entry in sorted(os.listdir(d)):
            if entry in found:
                continue
            try:
                found[entry] = find_wrapper(entry, [d])
            except LibwrapError:
                continue
    return list(found.values())


# -- shared pipeline pieces ----------------------------------------------

def _load_workdir(path) -> tuple[cfg.WorkingDir, cfg.WrapperConfig]:
    wd = cfg.WorkingDir.at(path)
    wd.check_initialized()
    return wd, wd.load_config()


def _build_dir(wd: cfg.WorkingDir) -> str:
    path = os.path.join(wd.root, "build")
    os.makedirs(path, exist_ok=True)
    return path


def _prepare_plan(wd, wrapper_config, toolchain, quiet=False):
    """Stages 2-4 shared by build and check: preprocess, parse, filter."""
    text = preprocess(
        wrapper_config, wd.header_aggregate, toolchain.cc, echo=toolchain.echo
    )
    with open(os.path.join(wd.root, "libwrap.i"), "w", encoding="utf-8") as fh:
        fh.write(text)
    scan = scan_text(text, filename=wd.header_aggregate)
    with open(wd.filter_file, encoding="utf-8") as fh:
        rules = filterset.parse_filter(fh.read())
    fs = filterset.FilterSet(
        rules=rules,
        default_include_dirs=filterset.include_dirs_from_flags(
            wrapper_config.preprocessor_flags
        ),
    )
    plan, warnings = wrapgen.build_plan(
        scan.decls, fs, wrapper_config, typedefs=scan.typedefs
    )
    if not quiet:
        for warning in warnings:
            print(str(warning))
    return plan, warnings, scan


def _monitor_source() -> str:
    override = os.environ.get(MONITOR_SOURCE_ENV)
    if override:
        if not os.path.exists(override):
            raise LibwrapError(
                f"{MONITOR_SOURCE_ENV} points to {override}, which does not exist"
            )
        return os.path.abspath(override)
    return str(importlib.resources.files("libwrap") / "runtime" / "monitor_stub.c")


def _runtime_include_dir() -> str:
    return str(importlib.resources.files("libwrap") / "runtime")


# -- subcommands ---------------------------------------------------------

def cmd_init(args) -> int:
    if args.update:
        dest = args.directory or (args.name and os.path.join(".", args.name))
        if not dest:
            raise LibwrapError("init --update needs the working directory")
        wd = cfg.WorkingDir.at(dest)
        changes = {}
        if args.name:
            changes["name"] = args.name
        if args.display_name:
            changes["display_name"] = args.display_name
        if args.language:
            changes["language"] = args.language
        if args.cppflags:
            changes["preprocessor_flags"] = shlex.split(args.cppflags)
        if args.ldflags:
            changes["linker_flags"] = shlex.split(args.ldflags)
        if args.libs:
            changes["libs"] = shlex.split(args.libs)
        if args.ellipsis_mapping:
            changes["ellipsis_mappings"] = dict(
                m.split(":", 1) for m in args.ellipsis_mapping
            )
        if args.variadic_is_void:
            changes["variadic_is_void"] = set(args.variadic_is_void)
        if args.prefix:
            changes["install_prefix"] = args.prefix
        updated = cfg.update_config(wd, changes)
        print(f"updated configuration of wrapper '{updated.name}' in {wd.root}")
        return 0

    if not args.name:
        raise LibwrapError("init needs --name (or --update to change an existing directory)")
    wrapper_config = cfg.WrapperConfig(
        name=args.name,
        display_name=args.display_name or "",
        language=args.language or "c",
        preprocessor_flags=shlex.split(args.cppflags or ""),
        linker_flags=shlex.split(args.ldflags or ""),
        libs=shlex.split(args.libs or ""),
        ellipsis_mappings=dict(
            m.split(":", 1) for m in (args.ellipsis_mapping or [])
        ),
        variadic_is_void=set(args.variadic_is_void or []),
        install_prefix=args.prefix or cfg.DEFAULT_INSTALL_PREFIX,
    )
    dest = args.directory or os.path.join(".", wrapper_config.name)
    wd = cfg.init_working_dir(wrapper_config, dest)
    print(cfg.next_steps(wd, wrapper_config))
    return 0


def cmd_build(args) -> int:
    wd, wrapper_config = _load_workdir(args.directory)
    toolchain = Toolchain(jobs=args.jobs, echo=args.print_commands)
    build = _build_dir(wd)
    name = wrapper_config.name

    print("[1/6] linking the example program against the target library")
    example_bin = os.path.join(build, "example")
    try:
        toolchain.check(
            list(wrapper_config.preprocessor_flags) + [wd.example_source]
            + list(wrapper_config.linker_flags) + list(wrapper_config.libs)
            + ["-o", example_bin],
            stage="example program build",
        )
    except ToolchainError as exc:
        raise ToolchainError(
            "the provided example is wrong: it does not compile and link "
            f"against the target library; fix {wd.example_source} or the "
            "configured flags, then re-run 'libwrap build'\n" + str(exc)
        ) from exc

    print("[2/6] preprocessing the umbrella header")
    print("[3/6] parsing declarations")
    print("[4/6] applying the filter")
    plan, _warnings, _scan = _prepare_plan(wd, wrapper_config, toolchain)
    if not plan.functions:
        raise LibwrapError(
            "nothing to wrap: no declaration passed the filter; add the "
            f"library headers to {wd.header_aggregate} and check "
            f"{wd.filter_file}"
        )
    print(f"wrapping {len(plan.functions)} functions")

    flags, manifest = wrapgen.generate_wrap_flags(plan)
    with open(os.path.join(wd.root, f"{name}.wrap"), "w", encoding="utf-8") as fh:
        fh.write(manifest)

    print("[5/6] linking the call-everything verification program")
    call_all_src = os.path.join(wd.root, "call_all.c")
    with open(call_all_src, "w", encoding="utf-8") as fh:
        fh.write(wrapgen.generate_call_all_example(plan))
    try:
        toolchain.check(
            list(wrapper_config.preprocessor_flags) + ["-I", wd.root, call_all_src]
            + list(wrapper_config.linker_flags) + list(wrapper_config.libs)
            + ["-o", os.path.join(build, "call_all")],
            stage="call-everything link test",
        )
    except ToolchainError as exc:
        raise ToolchainError(
            "some declared functions have no symbol in the target library "
            f"(or vice versa); run 'libwrap check {wd.root}' to get the "
            "missing-symbol lists and a filter fragment to exclude them\n"
            + str(exc)
        ) from exc

    print("[6/6] generating and compiling the wrapper libraries")
    _compile_wrappers(wd, wrapper_config, plan, toolchain)
    print(
        f"built all four wrapper variants in {wd.root} "
        f"({', '.join(sorted(_variant_filenames(name).values()))})"
    )
    print(f"next: libwrap install {wd.root}")
    return 0


def _compile_wrappers(wd, wrapper_config, plan, toolchain) -> None:
    build = _build_dir(wd)
    name = wrapper_config.name
    monitor_src = _monitor_source()
    include_flags = ["-I", wd.root, "-I", _runtime_include_dir()]
    cflags = list(wrapper_config.preprocessor_flags) + include_flags + ["-fno-builtin"]

    lt_src = os.path.join(wd.root, f"wrap_{name}_linktime.c")
    rt_src = os.path.join(wd.root, f"wrap_{name}_runtime.c")
    with open(lt_src, "w", encoding="utf-8") as fh:
        fh.write(wrapgen.generate_linktime_source(plan))
    with open(rt_src, "w", encoding="utf-8") as fh:
        fh.write(wrapgen.generate_runtime_source(plan))

    objects = {}
    for label, src in (("monitor", monitor_src), ("lt", lt_src), ("rt", rt_src)):
        for pic in (False, True):
            obj = os.path.join(build, f"{label}{'.pic' if pic else ''}.o")
            extra = ["-fPIC"] if pic else []
            toolchain.check(
                cflags + extra + ["-c", src, "-o", obj],
                stage=f"compiling {os.path.basename(src)}",
            )
            objects[(label, pic)] = obj

    wrap_flags, _ = wrapgen.generate_wrap_flags(plan)
    shared_tail = (
        list(wrapper_config.linker_flags)
        + ["-Wl,--no-as-needed"] + list(wrapper_config.libs)
    )

    def archive(out, members):
        if os.path.exists(out):
            os.unlink(out)
        proc = subprocess.run(
            ["ar", "rcs", out] + members, capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise ToolchainError(
                f"archiving {out} failed", command=["ar", "rcs", out] + members,
                output=proc.stdout + proc.stderr,
            )

    archive(os.path.join(wd.root, f"libwrap_{name}_linktime.a"),
            [objects[("lt", False)], objects[("monitor", False)]])
    archive(os.path.join(wd.root, f"libwrap_{name}_runtime.a"),
            [objects[("rt", False)], objects[("monitor", False)]])
    toolchain.check(
        ["-shared", objects[("lt", True)], objects[("monitor", True)],
         "-o", os.path.join(wd.root, f"libwrap_{name}_linktime.so")]
        + wrap_flags + shared_tail,
        stage="linking the shared link-time wrapper",
    )
    toolchain.check(
        ["-shared", objects[("rt", True)], objects[("monitor", True)],
         "-o", os.path.join(wd.root, f"libwrap_{name}_runtime.so")]
        + shared_tail + ["-ldl"],
        stage="linking the shared runtime wrapper",
    )


def cmd_check(args) -> int:
    wd, wrapper_config = _load_workdir(args.directory)
    toolchain = Toolchain(jobs=args.jobs, echo=args.print_commands)
    plan, _warnings, _scan = _prepare_plan(wd, wrapper_config, toolchain)
    candidates = plan.functions
    if args.symbols:
        tables = [read_symbols(path) for path in args.symbols]
        symbol_report = reconcile(candidates, tables)
    else:
        total = len(candidates)
        if total >= PROGRESS_NOTICE_THRESHOLD:
            print(
                f"checking {total} functions by compiling and linking a probe "
                "for each; this may take some time"
            )
        milestones = {max(1, total * i // 10) for i in range(1, 11)}

        def progress(done, _total):
            if done in milestones:
                print(f"  probed {done}/{total}")

        symbol_report = probe_check(
            candidates, wrapper_config, toolchain,
            progress=progress if total >= PROGRESS_NOTICE_THRESHOLD else None,
            keep_sources=os.path.join(_build_dir(wd), "probes"),
        )
    missing_path, resolvable_path = write_report(wd.root, symbol_report)
    if symbol_report.clean:
        print("wrapper is consistent: every declared function resolves against "
              "the target library")
        return 0
    print(f"{len(symbol_report.missing)} functions are missing from the target "
          f"library (list: {missing_path})")
    print(f"{len(symbol_report.resolvable_without_target)} functions resolve even "
          f"without the target library (list: {resolvable_path})")
    fragment = filterset.suggest_exclusions(symbol_report)
    print("append this to the filter to exclude them, then re-run "
          f"'libwrap build {wd.root}':\n")
    print(fragment, end="")
    return 0


def cmd_install(args) -> int:
    wd, wrapper_config = _load_workdir(args.directory)
    name = wrapper_config.name
    prefix = os.path.expanduser(args.prefix or wrapper_config.install_prefix)
    filenames = _variant_filenames(name)
    missing = [
        fn for fn in list(filenames.values()) + [f"{name}.wrap"]
        if not os.path.exists(os.path.join(wd.root, fn))
    ]
    if missing:
        raise LibwrapError(
            "wrapper artifacts are missing: " + ", ".join(sorted(missing))
            + f"; run 'libwrap build {wd.root}' first"
        )
    dest = os.path.join(prefix, name)
    os.makedirs(dest, exist_ok=True)
    for fn in list(filenames.values()) + [f"{name}.wrap"]:
        shutil.copy2(os.path.join(wd.root, fn), os.path.join(dest, fn))
    shutil.copy2(wd.config_file, os.path.join(dest, cfg.CONFIG_FILE))
    print(f"installed wrapper '{name}' to {dest}")
    if os.path.abspath(prefix) != os.path.expanduser(cfg.DEFAULT_INSTALL_PREFIX):
        print(f"add {prefix} to ${SEARCH_PATH_ENV} so 'libwrap link' can find it")
    print(f"next: libwrap installcheck {wd.root}")
    return 0


def cmd_installcheck(args) -> int:
    wd, wrapper_config = _load_workdir(args.directory)
    name = wrapper_config.name
    prefix = os.path.expanduser(args.prefix or wrapper_config.install_prefix)
    wrapper = find_wrapper(name, search_dirs([prefix]))
    toolchain = Toolchain(echo=args.print_commands)
    build = _build_dir(wd)

    profiles = {}
    for method in ("linktime", "runtime"):
        exe = os.path.join(build, f"example_{method}")
        base_command = (
            list(toolchain.cc) + list(wrapper_config.preprocessor_flags)
            + [wd.example_source] + list(wrapper_config.linker_flags)
            + list(wrapper_config.libs) + ["-o", exe]
        )
        rewritten = rewrite_link_command(
            base_command, [(method, wrapper)], prefer=None
        )
        proc = subprocess.run(rewritten, capture_output=True, text=True)
        if proc.returncode != 0:
            raise ToolchainError(
                f"linking the example with the {method} wrapper failed",
                command=rewritten, output=proc.stdout + proc.stderr,
            )
        profile_path = os.path.join(build, f"profile_{method}.json")
        env = dict(os.environ, LIBWRAP_PROFILE_OUT=profile_path)
        run_proc = subprocess.run(
            [exe], capture_output=True, text=True, env=env, cwd=wd.root
        )
        if run_proc.returncode != 0:
            raise LibwrapError(
                f"the {method}-wrapped example exited with "
                f"{run_proc.returncode}:\n{run_proc.stderr}"
            )
        if not os.path.exists(profile_path):
            raise LibwrapError(
                f"the {method}-wrapped example produced no profile at "
                f"{profile_path}"
            )
        profiles[method] = report.load_profile(profile_path)
        counts = report.region_counts(profiles[method])
        print(f"{method}: {exe}")
        print(f"  profile {profile_path} parses: "
              f"{len(counts)} regions, {sum(counts.values())} calls")

    lt_counts = report.region_counts(profiles["linktime"])
    rt_counts = report.region_counts(profiles["runtime"])
    if lt_counts == rt_counts:
        print("per-region call counts agree between both wrapping methods")
    else:
        diff = {
            k: (lt_counts.get(k, 0), rt_counts.get(k, 0))
            for k in set(lt_counts) | set(rt_counts)
            if lt_counts.get(k, 0) != rt_counts.get(k, 0)
        }
        raise LibwrapError(
            f"per-region call counts differ between methods: {diff}"
        )
    print("\ninspect the results with:")
    print(f"  libwrap report {os.path.join(build, 'profile_linktime.json')}")
    runtime_so = wrapper.library("runtime-shared")
    print("\nto intercept an already linked dynamic executable without "
          "relinking, preload the runtime wrapper:")
    print(f"  LD_PRELOAD={runtime_so} ./your_application")
    return 0


# -- link command rewriting ----------------------------------------------

def parse_libwrap_request(value: str) -> tuple[str, str]:
    """Split ``[method:]name`` into (method, name); default is linktime."""
    if ":" in value:
        method, _, name = value.partition(":")
        if method not in ("linktime", "runtime"):
            raise LibwrapError(
                f"unknown wrap method {method!r} (use 'linktime:' or 'runtime:')"
            )
        return method, name
    return "linktime", value


def _pick_variant(wrapper: InstalledWrapper, method: str, prefer):
    if prefer is not None:
        variant = f"{method}-{prefer}"
        if variant not in wrapper.variants:
            raise LibwrapError(
                f"wrapper {wrapper.name!r} has no {variant} variant "
                f"(present: {', '.join(wrapper.variants)})"
            )
        return variant
    default_kind = "static" if method == "linktime" else "shared"
    for kind in (default_kind, "shared" if default_kind == "static" else "static"):
        variant = f"{method}-{kind}"
        if variant in wrapper.variants:
            return variant
    raise LibwrapError(
        f"wrapper {wrapper.name!r} has no {method} variant "
        f"(present: {', '.join(wrapper.variants)})"
    )


def rewrite_link_command(command, requests, prefer=None) -> list[str]:
    """Inject wrapper activation into a compile/link command.

    For each requested wrapper the insertion lands immediately before
    the first occurrence of one of its configured target libraries (so
    the wrapper library precedes the target in link order); user
    arguments are never reordered or dropped.
    """
    rewritten = list(command)
    for method, wrapper in requests:
        variant = _pick_variant(wrapper, method, prefer)
        library = wrapper.library(variant)
        insertion = []
        if method == "linktime":
            with open(wrapper.manifest, encoding="utf-8") as fh:
                names = [line.strip() for line in fh if line.strip()]
            insertion += [f"-Wl,--wrap={n}" for n in names]
            insertion.append("-Wl,--export-dynamic")
        else:
            insertion.append("-Wl,--no-as-needed")
        insertion.append(library)
        if variant.endswith("shared"):
            insertion.append("-Wl,-rpath," + os.path.dirname(library))
        rewritten = _insert_before_target_libs(
            rewritten, insertion, wrapper.config.libs
        )
    return rewritten


def _insert_before_target_libs(command, insertion, target_libs) -> list[str]:
    position = None
    targets = set(target_libs)
    for i, arg in enumerate(command):
        if arg in targets:
            position = i
            break
    if position is None:
        for i, arg in enumerate(command):
            if arg.startswith("-l"):
                position = i
                break
    if position is None:
        position = len(command)
    return command[:position] + insertion + command[position:]


def cmd_link(args) -> int:
    if not args.command:
        raise LibwrapError("link needs a compile/link command after the options")
    dirs = search_dirs(args.path or [])
    requests = []
    for value in args.libwrap:
        method, name = parse_libwrap_request(value)
        requests.append((method, find_wrapper(name, dirs)))
    rewritten = rewrite_link_command(args.command, requests, prefer=args.prefer)
    if args.print_commands:
        print("+ " + " ".join(shlex.quote(c) for c in rewritten))
    if args.dry_run:
        print(" ".join(shlex.quote(c) for c in rewritten))
        return 0
    proc = subprocess.run(rewritten)
    return proc.returncode


def cmd_info(args) -> int:
    dirs = search_dirs([args.prefix] if args.prefix else [])
    if args.name:
        wrapper = find_wrapper(args.name, dirs)
        print(f"name:          {wrapper.name}")
        print(f"display name:  {wrapper.config.display_name}")
        print(f"install path:  {wrapper.path}")
        print(f"variants:      {', '.join(wrapper.variants)}")
        print(f"manifest:      {wrapper.manifest}")
        print(f"language:      {wrapper.config.language}")
        print(f"cppflags:      {' '.join(wrapper.config.preprocessor_flags)}")
        print(f"ldflags:       {' '.join(wrapper.config.linker_flags)}")
        print(f"libs:          {' '.join(wrapper.config.libs)}")
        for fn, target in sorted(wrapper.config.ellipsis_mappings.items()):
            print(f"ellipsis:      {fn} -> {target}")
        for fn in sorted(wrapper.config.variadic_is_void):
            print(f"variadic-void: {fn}")
        return 0
    wrappers = list_wrappers(dirs)
    if not wrappers:
        print("no wrappers installed")
        return 0
    width = max(len(w.name) for w in wrappers)
    for w in sorted(wrappers, key=lambda w: w.name):
        print(f"{w.name:<{width}}  {','.join(w.variants):<52}  {w.path}")
    return 0


def cmd_report(args) -> int:
    roots = [report.load_profile(path) for path in args.profiles]
    merged = report.merge_profiles(roots)
    if args.flat:
        print(report.render_flat(merged))
    else:
        print(report.render_tree(merged))
    return 0


# -- argument parsing ----------------------------------------------------

def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="libwrap",
        description="Generate interception wrappers for C libraries and "
                    "record exact call profiles through them.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("init", help="initialize a wrapper working directory")
    p.add_argument("--name", help="wrapper name (letters, digits, '_', '-')")
    p.add_argument("--display-name", help="human-readable name")
    p.add_argument("-x", "--language", help="library language (only 'c')")
    p.add_argument("--cppflags", help="preprocessor flags (one shell-quoted string)")
    p.add_argument("--ldflags", help="linker flags")
    p.add_argument("--libs", help="link libraries, e.g. '-lfftw3'")
    p.add_argument("--ellipsis-mapping", action="append", metavar="FUNC:VFUNC",
                   help="forward a variadic function to its va_list version")
    p.add_argument("--variadic-is-void", action="append", metavar="FUNC",
                   help="treat an empty-parentheses declaration as zero-argument")
    p.add_argument("--prefix", help="install prefix for this wrapper")
    p.add_argument("--update", action="store_true",
                   help="merge the given settings into an existing directory")
    p.add_argument("directory", nargs="?", help="working directory (default ./<name>)")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("build", help="analyze headers and build the wrapper libraries")
    p.add_argument("directory")
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--print-commands", action="store_true",
                   help="echo every subprocess command line")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check", help="reconcile declared functions with library symbols")
    p.add_argument("directory")
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--symbols", nargs="+", metavar="LIBFILE",
                   help="fast mode: read these libraries' symbol tables "
                        "instead of link-probing")
    p.add_argument("--print-commands", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("install", help="install the built wrapper")
    p.add_argument("directory")
    p.add_argument("--prefix", help="override the configured install prefix")
    p.set_defaults(func=cmd_install)

    p = sub.add_parser("installcheck",
                       help="build and run the example against the installed wrapper")
    p.add_argument("directory")
    p.add_argument("--prefix", help="where the wrapper was installed")
    p.add_argument("--print-commands", action="store_true")
    p.set_defaults(func=cmd_installcheck)

    p = sub.add_parser("link", help="activate wrappers in a compile/link command")
    p.add_argument("--libwrap", action="append", required=True,
                   metavar="[METHOD:]NAME",
                   help="wrapper to activate; METHOD is linktime (default) "
                        "or runtime; repeatable")
    p.add_argument("--libwrap-prefer", dest="prefer", choices=("static", "shared"),
                   help="which wrapper library variant to inject")
    p.add_argument("--libwrap-path", dest="path", action="append", metavar="DIR",
                   help="extra directory to search for installed wrappers")
    p.add_argument("--print-commands", action="store_true")
    p.add_argument("--dry-run", action="store_true",
                   help="print the rewritten command instead of running it")
    p.add_argument("command", nargs=argparse.REMAINDER,
                   help="the compile/link command to rewrite")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("info", help="list installed wrappers")
    p.add_argument("name", nargs="?")
    p.add_argument("--prefix", help="extra install prefix to search")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("report", help="render recorded profiles as a call tree")
    p.add_argument("profiles", nargs="+", metavar="PROFILE.json")
    p.add_argument("--flat", action="store_true",
                   help="per-region totals sorted by exclusive time")
    p.set_defaults(func=cmd_report)

    return parser


_DASH_VALUE_OPTIONS = ("--cppflags", "--ldflags", "--libs")


def _join_dash_values(argv: list[str]) -> list[str]:
    """Turn ``--cppflags -I/x`` into ``--cppflags=-I/x``.

    Flag values here routinely start with ``-``, which argparse would
    otherwise read as the next option.
    """
    out = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg in _DASH_VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{arg}={argv[i + 1]}")
            i += 2
        else:
            out.append(arg)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(_join_dash_values(list(sys.argv[1:] if argv is None else argv)))
    try:
        return args.func(args)
    except LibwrapError as exc:
        print(f"libwrap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
