import os
import subprocess

import pytest

MONITOR_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
REPO_ROOT = os.path.dirname(MONITOR_ROOT)
CC = os.environ.get("CC", "cc")


@pytest.fixture(scope="session")
def monitor(tmp_path_factory):
    """The runtime compiled into an archive, plus its include dir."""
    tmp = tmp_path_factory.mktemp("monitor_build")
    obj = str(tmp / "libwrap_monitor.o")
    source = os.path.join(MONITOR_ROOT, "src", "libwrap_monitor.c")
    include = os.path.join(MONITOR_ROOT, "include")
    subprocess.run(
        [CC, "-O2", "-Wall", "-Wextra", "-Werror", "-std=c11", "-pthread",
         "-fPIC", "-I", include, "-c", source, "-o", obj],
        check=True,
    )
    archive = str(tmp / "libwrap_monitor.a")
    subprocess.run(["ar", "rcs", archive, obj], check=True)
    return {"archive": archive, "include": include, "source": source}


@pytest.fixture()
def build_driver(monitor, tmp_path):
    """Compile a C driver against the runtime; returns the executable path."""

    def _build(source_text, name="driver"):
        src = tmp_path / f"{name}.c"
        src.write_text(source_text)
        exe = str(tmp_path / name)
        subprocess.run(
            [CC, "-O2", "-Wall", "-Wextra", "-Werror", "-pthread",
             str(src), monitor["archive"], "-I", monitor["include"],
             "-o", exe],
            check=True,
        )
        return exe

    return _build
