"""Shared helpers for the test suite: fixture C libraries and CLI runners."""

from __future__ import annotations

import os
import subprocess
import textwrap

from libwrap import cli

CC = os.environ.get("CC", "cc")


def run(cmd, cwd=None, env=None, check=True):
    proc = subprocess.run(cmd, cwd=cwd, env=env, capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(
            f"command failed ({proc.returncode}): {' '.join(cmd)}\n"
            f"{proc.stdout}{proc.stderr}"
        )
    return proc


def compile_shared(sources, out, extra=()):
    run([CC, "-shared", "-fPIC", *extra, *sources, "-o", out])


def compile_archive(sources, out, workdir, extra=()):
    objs = []
    for src in sources:
        obj = os.path.join(workdir, os.path.basename(src) + ".o")
        run([CC, "-c", *extra, src, "-o", obj])
        objs.append(obj)
    if os.path.exists(out):
        os.unlink(out)
    run(["ar", "rcs", out, *objs])


def write(path, content):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(textwrap.dedent(content))
    return path


def cli_run(argv, capsys=None):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    code = cli.main([str(a) for a in argv])
    if capsys is None:
        return code, "", ""
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- the "microlib" fixture ----------------------------------------------
#
# A small library covering every forwarding-fidelity shape: ints,
# doubles, pointers, struct by value, function pointers, a variadic
# function with its va_list twin, recursion, and an empty-parentheses
# declaration.  Every function bumps an internal counter that tests read
# through mk_oracle_count(), which is deliberately NOT declared in the
# wrappable header.

MICROLIB_HEADER = """\
#ifndef MICROLIB_H
#define MICROLIB_H

#include <stdarg.h>

typedef struct mk_vec { double x; double y; long tag; } mk_vec;

int mk_int(int a, int b);
double mk_double(double x);
const char *mk_strptr(const char *s, char **out);
mk_vec mk_scale(mk_vec v, double f);
int mk_apply(int (*fn)(int, void *), int seed, void *ud);
int mk_logf_style(const char *fmt, ...);
int mk_vlogf_style(const char *fmt, va_list ap);
long mk_rec(long n);
void mk_record(int v);
int mk_unknown();

#endif
"""

MICROLIB_SOURCE = """\
#include "microlib.h"
#include <stdio.h>
#include <string.h>

static unsigned long counters[16];
static char effects[256];
static unsigned effects_len;

enum { I_INT, I_DOUBLE, I_STRPTR, I_SCALE, I_APPLY, I_LOGF, I_VLOGF,
       I_REC, I_RECORD, I_UNKNOWN };

unsigned long mk_oracle_count(int idx) { return counters[idx]; }
const char *mk_oracle_effects(void) { return effects; }
void mk_oracle_reset(void) {
    memset(counters, 0, sizeof counters);
    memset(effects, 0, sizeof effects);
    effects_len = 0;
}

int mk_int(int a, int b) { counters[I_INT]++; return a * 1000003 + b; }
double mk_double(double x) { counters[I_DOUBLE]++; return x * 1.5 + 0.25; }
const char *mk_strptr(const char *s, char **out) {
    counters[I_STRPTR]++;
    if (out) *out = (char *)s + 1;
    return s;
}
mk_vec mk_scale(mk_vec v, double f) {
    counters[I_SCALE]++;
    mk_vec r = { v.x * f, v.y * f, v.tag + 1 };
    return r;
}
int mk_apply(int (*fn)(int, void *), int seed, void *ud) {
    counters[I_APPLY]++;
    return fn(seed, ud) + 1;
}
int mk_vlogf_style(const char *fmt, va_list ap) {
    int n;
    counters[I_VLOGF]++;
    n = vsnprintf(effects + effects_len, sizeof effects - effects_len, fmt, ap);
    if (n > 0) effects_len += (unsigned)n;
    return n;
}
int mk_logf_style(const char *fmt, ...) {
    va_list ap;
    int n;
    counters[I_LOGF]++;
    va_start(ap, fmt);
    n = mk_vlogf_style(fmt, ap);
    va_end(ap);
    return n;
}
long mk_rec(long n) {
    counters[I_REC]++;
    return n <= 0 ? 0 : n + mk_rec(n - 1);
}
void mk_record(int v) {
    counters[I_RECORD]++;
    if (effects_len < sizeof effects - 4) {
        effects[effects_len++] = (char)('0' + (v % 10));
    }
}
int mk_unknown() { counters[I_UNKNOWN]++; return 77; }
"""


def build_microlib(root):
    """Build microlib as both a shared object and a static archive."""
    include = os.path.join(root, "include")
    lib = os.path.join(root, "lib")
    os.makedirs(include, exist_ok=True)
    os.makedirs(lib, exist_ok=True)
    header = write(os.path.join(include, "microlib.h"), MICROLIB_HEADER)
    source = write(os.path.join(root, "microlib.c"), MICROLIB_SOURCE)
    compile_shared([source], os.path.join(lib, "libmicrolib.so"),
                   extra=["-I", include])
    compile_archive([source], os.path.join(lib, "libmicrolib.a"), root,
                    extra=["-I", include, "-fPIC"])
    return {"root": root, "include": include, "lib": lib, "header": header}


# -- the 251-function "mainlib" fixture -----------------------------------

def mainlib_function_names(count=251):
    return [f"fx_{i:03d}" for i in range(count)]


def build_mainlib(root, count=251):
    """A library of ``count`` functions, each with an exact call counter."""
    include = os.path.join(root, "include")
    lib = os.path.join(root, "lib")
    os.makedirs(include, exist_ok=True)
    os.makedirs(lib, exist_ok=True)
    names = mainlib_function_names(count)
    header_lines = ["#ifndef MAINLIB_H", "#define MAINLIB_H", ""]
    header_lines += [f"long {name}(long v);" for name in names]
    header_lines += ["", "#endif", ""]
    header = write(os.path.join(include, "mainlib.h"), "\n".join(header_lines))

    src_lines = ['#include "mainlib.h"', "",
                 f"static unsigned long counters[{count}];",
                 "unsigned long fx_oracle_count(int idx) { return counters[idx]; }",
                 ""]
    for i, name in enumerate(names):
        src_lines.append(
            f"long {name}(long v) {{ counters[{i}]++; return v + {i}; }}"
        )
    src_lines.append("")
    source = write(os.path.join(root, "mainlib.c"), "\n".join(src_lines))
    compile_shared([source], os.path.join(lib, "libmainlib.so"),
                   extra=["-I", include])
    compile_archive([source], os.path.join(lib, "libmainlib.a"), root,
                    extra=["-I", include, "-fPIC"])
    return {"root": root, "include": include, "lib": lib, "header": header,
            "names": names}


# -- inner/outer cross-library fixture ------------------------------------

INNERLIB_HEADER = """\
#ifndef INNERLIB_H
#define INNERLIB_H
void in_leaf(void);
#endif
"""

INNERLIB_SOURCE = """\
#include "innerlib.h"
static unsigned long leaf_calls;
unsigned long in_oracle_leaf_calls(void) { return leaf_calls; }
void in_leaf(void) { leaf_calls++; }
"""

OUTERLIB_HEADER = """\
#ifndef OUTERLIB_H
#define OUTERLIB_H
void out_compute(int n);
long out_deep(long depth);
long out_step(long depth);
#endif
"""

# The deep recursion ping-pongs between two translation units so every
# level crosses a symbol boundary.  A self-call inside one object is
# compiled as a direct jump, which no symbol-based interception can see.
OUTERLIB_MAIN_SOURCE = """\
#include "outerlib.h"
#include "innerlib.h"
void out_compute(int n) {
    int i;
    for (i = 0; i < n; i++)
        in_leaf();
}
long out_deep(long depth) {
    if (depth <= 0) {
        in_leaf();
        return 0;
    }
    return 1 + out_step(depth - 1);
}
"""

OUTERLIB_STEP_SOURCE = """\
#include "outerlib.h"
long out_step(long depth) {
    return out_deep(depth);
}
"""


def build_crosslibs(root):
    """Two libraries where the outer one calls into the inner one."""
    include = os.path.join(root, "include")
    lib = os.path.join(root, "lib")
    os.makedirs(include, exist_ok=True)
    os.makedirs(lib, exist_ok=True)
    write(os.path.join(include, "innerlib.h"), INNERLIB_HEADER)
    write(os.path.join(include, "outerlib.h"), OUTERLIB_HEADER)
    inner_src = write(os.path.join(root, "innerlib.c"), INNERLIB_SOURCE)
    outer_main = write(os.path.join(root, "outer_main.c"), OUTERLIB_MAIN_SOURCE)
    outer_step = write(os.path.join(root, "outer_step.c"), OUTERLIB_STEP_SOURCE)
    compile_shared([inner_src], os.path.join(lib, "libinnerlib.so"),
                   extra=["-I", include])
    compile_shared([outer_main, outer_step], os.path.join(lib, "libouterlib.so"),
                   extra=["-I", include, "-L", lib, "-Wl,--no-as-needed",
                          "-linnerlib", "-Wl,-rpath," + lib])
    compile_archive([inner_src], os.path.join(lib, "libinnerlib.a"), root,
                    extra=["-I", include, "-fPIC"])
    compile_archive([outer_main, outer_step], os.path.join(lib, "libouterlib.a"),
                    root, extra=["-I", include, "-fPIC"])
    return {"root": root, "include": include, "lib": lib}


# -- reconcile fixture: 20 declared, 12 defined ---------------------------

def build_reconcilelib(root, declared=20, defined=12):
    include = os.path.join(root, "include")
    lib = os.path.join(root, "lib")
    os.makedirs(include, exist_ok=True)
    os.makedirs(lib, exist_ok=True)
    defined_names = [f"rc_def_{i:02d}" for i in range(defined)]
    missing_names = [f"rc_missing_{i:02d}" for i in range(declared - defined)]
    header = write(
        os.path.join(include, "reconcilelib.h"),
        "\n".join([f"int {n}(int v);" for n in defined_names + missing_names]) + "\n",
    )
    source = write(
        os.path.join(root, "reconcilelib.c"),
        '#include "reconcilelib.h"\n'
        + "\n".join(f"int {n}(int v) {{ return v + 1; }}" for n in defined_names)
        + "\n",
    )
    compile_shared([source], os.path.join(lib, "libreconcilelib.so"),
                   extra=["-I", include])
    return {
        "root": root, "include": include, "lib": lib, "header": header,
        "defined": defined_names, "missing": sorted(missing_names),
    }


# Deterministic example driver for the microlib wrapper.  Every loop
# bound below is a frozen expected call count; the oracle is plain
# enumeration of this script.  Recursive fixture functions are avoided
# here because library-internal calls are visible to the runtime method
# but not to the link-time method on a shared target.
FIDELITY_DRIVER = """\
#include <microlib.h>
#include <stdio.h>

extern const char *mk_oracle_effects(void);

static int cb(int x, void *ud) { (void)ud; return x * 3 + 1; }

int main(void) {
    unsigned long acc = 0;
    int i, n;
    char *out = 0;
    mk_vec v = { 1.25, -2.5, 7 };
    for (i = 0; i < 40; i++) acc += (unsigned long)mk_int(i, 2 * i + 1);
    for (i = 0; i < 25; i++) acc += (unsigned long)(mk_double(i * 0.5) * 100.0);
    for (i = 0; i < 10; i++) {
        const char *s = mk_strptr("hello", &out);
        acc += (unsigned long)(out - s);
    }
    for (i = 0; i < 15; i++) v = mk_scale(v, 1.01);
    for (i = 0; i < 12; i++) acc += (unsigned long)mk_apply(cb, i, 0);
    for (i = 0; i < 20; i++) mk_record(i);
    n = mk_logf_style("fmt %d %s %.2f|", 42, "str", 3.5);
    acc += (unsigned long)mk_unknown();
    printf("acc=%lu n=%d v=(%a,%a,%ld) effects=[%s]\\n",
           acc, n, v.x, v.y, v.tag, mk_oracle_effects());
    return 0;
}
"""

EXPECTED_MICRO_COUNTS = {
    "mk_int": 40,
    "mk_double": 25,
    "mk_strptr": 10,
    "mk_scale": 15,
    "mk_apply": 12,
    "mk_record": 20,
    "mk_logf_style": 1,
    "mk_unknown": 1,
}


def make_mainlib_driver(names, passes=6):
    """Driver making 6 x 1001 = 6006 scripted calls over 251 functions.

    Function i is called (i % 7 + 1) times per pass, through a function
    pointer table so every call site is uniform.  The per-function
    expectation is exactly passes * (i % 7 + 1); the library's internal
    counters are printed at the end as the independent oracle.
    """
    lines = [
        "#include <mainlib.h>",
        "#include <stdio.h>",
        "",
        "extern unsigned long fx_oracle_count(int idx);",
        "",
        "typedef long (*fx_fn)(long);",
        "static const fx_fn fns[] = {",
    ]
    lines += [f"    {name}," for name in names]
    lines += [
        "};",
        "",
        "int main(void) {",
        "    long acc = 0;",
        "    int pass, i, k;",
        f"    for (pass = 0; pass < {passes}; pass++)",
        f"        for (i = 0; i < {len(names)}; i++)",
        "            for (k = 0; k < i % 7 + 1; k++)",
        "                acc += fns[i]((long)k);",
        "    printf(\"acc=%ld\\n\", acc);",
        f"    for (i = 0; i < {len(names)}; i++)",
        "        printf(\"count[%d]=%lu\\n\", i, fx_oracle_count(i));",
        "    return 0;",
        "}",
        "",
    ]
    return "\n".join(lines)


def mainlib_expected_counts(names, passes=6):
    return {name: passes * (i % 7 + 1) for i, name in enumerate(names)}


CROSSLIB_DRIVER = """\
#include <outerlib.h>
#include <innerlib.h>
#include <stdio.h>

extern unsigned long in_oracle_leaf_calls(void);

int main(void) {
    long r = out_deep(100);
    out_compute(5);
    printf("r=%ld leaf=%lu\\n", r, in_oracle_leaf_calls());
    return 0;
}
"""

# out_deep(100) alternates out_deep/out_step down to depth zero, then
# calls in_leaf once; out_compute(5) calls in_leaf five times.
EXPECTED_CROSS_COUNTS = {
    "out_deep": 101,
    "out_step": 100,
    "out_compute": 1,
    "in_leaf": 6,
}


def init_workspace(tmp, name, fixture, libs, extra_init_args=()):
    """init a working directory against a built fixture library."""
    wd = os.path.join(tmp, f"wd_{name}")
    code, _, _ = cli_run([
        "init", "--name", name,
        "--cppflags", f"-I{fixture['include']}",
        "--ldflags", f"-L{fixture['lib']} -Wl,-rpath,{fixture['lib']}",
        "--libs", libs,
        "--prefix", os.path.join(tmp, "prefix"),
        *extra_init_args,
        wd,
    ])
    assert code == 0
    return wd
