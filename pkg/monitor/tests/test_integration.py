"""Integration with the wrapper toolkit: the full runtime replaces the
count-only stub via LIBWRAP_MONITOR_SOURCE, and wrapped fixtures now
record real timings."""

import json
import os
import subprocess
import sys

import pytest

CC = os.environ.get("CC", "cc")
MONITOR_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SRC_PATH = os.path.join(os.path.dirname(MONITOR_ROOT), "src")

SLOWLIB_HEADER = """\
#ifndef SLOWLIB_H
#define SLOWLIB_H
void sl_slow(int ms);
void sl_fast(void);
void sl_outer(int ms);
#endif
"""

# sl_outer lives in its own translation unit so its call into sl_slow
# crosses a symbol boundary (a same-unit call would compile to a direct
# jump that no interception method can observe).
SLOWLIB_SOURCE_A = """\
#include "slowlib.h"
#include <time.h>
void sl_slow(int ms) {
    struct timespec ts = { ms / 1000, (long)(ms % 1000) * 1000000L };
    nanosleep(&ts, 0);
}
void sl_fast(void) { }
"""

SLOWLIB_SOURCE_B = """\
#include "slowlib.h"
#include <time.h>
void sl_outer(int ms) {
    struct timespec ts = { ms / 1000, (long)(ms % 1000) * 1000000L };
    sl_slow(ms);
    nanosleep(&ts, 0);
}
"""

# Only calls made directly by the application: both wrapping methods
# observe exactly these, so their profiles must agree.
DRIVER = """\
#include <slowlib.h>
int main(void) {
    int i;
    for (i = 0; i < 4; i++)
        sl_slow(5);
    for (i = 0; i < 100; i++)
        sl_fast();
    return 0;
}
"""

NEST_DRIVER = """\
#include <slowlib.h>
int main(void) {
    sl_outer(6);
    return 0;
}
"""


def toolkit(args, env=None):
    full_env = dict(os.environ)
    full_env["PYTHONPATH"] = SRC_PATH + os.pathsep + full_env.get("PYTHONPATH", "")
    full_env.update(env or {})
    return subprocess.run(
        [sys.executable, "-m", "libwrap.cli", *args],
        capture_output=True, text=True, env=full_env,
    )


@pytest.fixture(scope="module")
def slow_workspace(tmp_path_factory, monitor_source_env):
    tmp = tmp_path_factory.mktemp("slowws")
    include = tmp / "include"
    lib = tmp / "lib"
    include.mkdir()
    lib.mkdir()
    (include / "slowlib.h").write_text(SLOWLIB_HEADER)
    src_a = tmp / "slow_a.c"
    src_a.write_text(SLOWLIB_SOURCE_A)
    src_b = tmp / "slow_b.c"
    src_b.write_text(SLOWLIB_SOURCE_B)
    subprocess.run(
        [CC, "-shared", "-fPIC", "-I", str(include), str(src_a), str(src_b),
         "-o", str(lib / "libslowlib.so")],
        check=True,
    )
    wd = str(tmp / "wd")
    prefix = str(tmp / "prefix")
    proc = toolkit([
        "init", "--name", "slowlib",
        "--cppflags", f"-I{include}",
        "--ldflags", f"-L{lib} -Wl,-rpath,{lib}",
        "--libs", "-lslowlib",
        "--prefix", prefix, wd,
    ])
    assert proc.returncode == 0, proc.stderr
    (tmp / "wd" / "libwrap.h").write_text("#include <slowlib.h>\n")
    (tmp / "wd" / "main.c").write_text(DRIVER)
    proc = toolkit(["build", wd], env=monitor_source_env)
    assert proc.returncode == 0, proc.stderr
    proc = toolkit(["install", wd])
    assert proc.returncode == 0, proc.stderr
    return {"wd": wd, "prefix": prefix, "include": str(include),
            "lib": str(lib)}


@pytest.fixture(scope="session")
def monitor_source_env(monitor):
    return {"LIBWRAP_MONITOR_SOURCE": monitor["source"]}


def region_totals(profile_path):
    with open(profile_path) as fh:
        data = json.load(fh)
    names = {r["id"]: r["name"] for r in data["regions"]}
    counts, incl = {}, {}

    def visit(node):
        for child in node["children"]:
            name = names[child["region"]]
            counts[name] = counts.get(name, 0) + child["count"]
            incl[name] = incl.get(name, 0) + child["incl_ns"]
            visit(child)

    visit(data["calltree"])
    return counts, incl, data


def test_installcheck_with_real_runtime(slow_workspace):
    proc = toolkit(["installcheck", slow_workspace["wd"]])
    assert proc.returncode == 0, proc.stderr
    assert "counts agree" in proc.stdout


def test_methods_agree_on_counts_and_times(slow_workspace, tmp_path):
    results = {}
    for method, prefer in (("linktime", "static"), ("runtime", "shared")):
        exe = str(tmp_path / f"app_{method}")
        proc = toolkit([
            "link", f"--libwrap={method}:slowlib",
            "--libwrap-prefer", prefer,
            "--libwrap-path", slow_workspace["prefix"],
            CC, f"-I{slow_workspace['include']}",
            os.path.join(slow_workspace["wd"], "main.c"),
            f"-L{slow_workspace['lib']}",
            f"-Wl,-rpath,{slow_workspace['lib']}", "-lslowlib",
            "-o", exe,
        ])
        assert proc.returncode == 0, proc.stderr
        profile = str(tmp_path / f"profile_{method}.json")
        subprocess.run([exe], check=True,
                       env=dict(os.environ, LIBWRAP_PROFILE_OUT=profile))
        results[method] = region_totals(profile)

    lt_counts, lt_incl, _ = results["linktime"]
    rt_counts, rt_incl, _ = results["runtime"]
    assert lt_counts == rt_counts == {"sl_slow": 4, "sl_fast": 100}
    for name in set(lt_incl) | set(rt_incl):
        a, b = lt_incl.get(name, 0), rt_incl.get(name, 0)
        if max(a, b) > 1_000_000:
            assert abs(a - b) <= 0.20 * max(a, b), (
                f"{name}: {a} vs {b} ns inclusive"
            )
    # Four 5 ms calls: at least 20 ms inclusive.
    assert lt_incl["sl_slow"] >= 20_000_000


def test_nested_region_timing_attribution(slow_workspace, tmp_path):
    """sl_outer's exclusive excludes the nested sl_slow it calls.

    Uses the runtime method: the nested call originates inside the
    shared target library, which only runtime wrapping intercepts.
    """
    nest_src = tmp_path / "nest.c"
    nest_src.write_text(NEST_DRIVER)
    exe = str(tmp_path / "app_nest")
    proc = toolkit([
        "link", "--libwrap=runtime:slowlib",
        "--libwrap-path", slow_workspace["prefix"],
        CC, f"-I{slow_workspace['include']}", str(nest_src),
        f"-L{slow_workspace['lib']}",
        f"-Wl,-rpath,{slow_workspace['lib']}", "-lslowlib",
        "-o", exe,
    ])
    assert proc.returncode == 0, proc.stderr
    profile = str(tmp_path / "profile_nest.json")
    subprocess.run([exe], check=True,
                   env=dict(os.environ, LIBWRAP_PROFILE_OUT=profile))
    _, _, data = region_totals(profile)
    names = {r["id"]: r["name"] for r in data["regions"]}
    outer = next(c for c in data["calltree"]["children"]
                 if names[c["region"]] == "sl_outer")
    nested = [names[c["region"]] for c in outer["children"]]
    assert nested == ["sl_slow"]
    inner = outer["children"][0]
    assert outer["excl_ns"] == outer["incl_ns"] - inner["incl_ns"]
    assert outer["incl_ns"] >= 11_000_000      # two 6 ms phases
    assert inner["incl_ns"] >= 5_000_000


def test_report_renders_real_times(slow_workspace, tmp_path):
    exe = str(tmp_path / "app_report")
    proc = toolkit([
        "link", "--libwrap=slowlib",
        "--libwrap-path", slow_workspace["prefix"],
        CC, f"-I{slow_workspace['include']}",
        os.path.join(slow_workspace["wd"], "main.c"),
        f"-L{slow_workspace['lib']}",
        f"-Wl,-rpath,{slow_workspace['lib']}", "-lslowlib",
        "-o", exe,
    ])
    assert proc.returncode == 0, proc.stderr
    profile = str(tmp_path / "profile_report.json")
    subprocess.run([exe], check=True,
                   env=dict(os.environ, LIBWRAP_PROFILE_OUT=profile))
    proc = toolkit(["report", "--flat", profile])
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[1].split()[0] in ("sl_slow", "sl_outer")
    slow_row = next(l for l in lines if l.startswith("sl_slow"))
    assert float(slow_row.split()[-1]) >= 0.02
