"""Compiler and linker invocation helpers.

Every build step in the toolkit funnels through :func:`run`, so a single
``echo`` switch exposes each subprocess command line for transparency.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

from .errors import ToolchainError


def default_cc() -> list[str]:
    """The user's compiler driver: $CC if set, otherwise ``cc``."""
    cc = os.environ.get("CC", "cc")
    return shlex.split(cc)


@dataclass
class Toolchain:
    """A compiler driver plus the knobs shared by all build stages."""

    cc: list[str] = field(default_factory=default_cc)
    jobs: int = 4
    echo: bool = False

    def run(self, args: list[str], cwd=None) -> subprocess.CompletedProcess:
        return run(list(self.cc) + args, cwd=cwd, echo=self.echo)

    def check(self, args: list[str], stage: str, cwd=None) -> None:
        """Run the compiler, raising a diagnosable error on failure."""
        proc = self.run(args, cwd=cwd)
        if proc.returncode != 0:
            raise ToolchainError(
                f"{stage} failed (exit {proc.returncode})",
                command=list(self.cc) + list(args),
                output=proc.stdout + proc.stderr,
            )

    def sanity_check(self) -> None:
        """Verify the toolchain can compile and link a trivial program."""
        with tempfile.TemporaryDirectory(prefix="libwrap-cc-") as tmp:
            src = os.path.join(tmp, "conftest.c")
            with open(src, "w") as fh:
                fh.write("int main(void) { return 0; }\n")
            self.check(
                [src, "-o", os.path.join(tmp, "conftest")],
                stage="toolchain sanity check",
            )


def run(command: list[str], cwd=None, echo: bool = False) -> subprocess.CompletedProcess:
    """Run a subprocess, capturing text output."""
    if echo:
        print("+ " + " ".join(shlex.quote(c) for c in command))
    try:
        return subprocess.run(
            command, cwd=cwd, capture_output=True, text=True, check=False
        )
    except FileNotFoundError as exc:
        raise ToolchainError(f"command not found: {command[0]}", command=command) from exc
