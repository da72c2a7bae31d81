"""Per-function compile/link probing.

For every candidate a one-function caller is generated, compiled once,
then linked twice: with the target libraries and without them.  A link
that fails even with the target marks the symbol missing; a link that
succeeds without the target means the symbol comes from somewhere else
(usually a system library) and is probably not meant to be wrapped.
Each probe runs in its own temporary directory so parallel runs cannot
interfere.
"""

from __future__ import annotations

import os
import tempfile
from concurrent.futures import ThreadPoolExecutor

from ..errors import ToolchainError


def probe_check(candidates, config, toolchain, progress=None, keep_sources=None):
    """Link-probe every candidate; returns a SymbolReport.

    ``progress`` is called as ``progress(done, total)`` after each
    candidate finishes, from the coordinating thread.  When
    ``keep_sources`` names a directory, each probe source is also saved
    there for inspection.
    """
    from . import SymbolReport  # local import to avoid a cycle

    toolchain.sanity_check()
    if keep_sources:
        os.makedirs(keep_sources, exist_ok=True)
    candidates = list(candidates)
    total = len(candidates)
    outcomes = {}
    if candidates:
        jobs = max(1, min(toolchain.jobs, total))
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            done = 0
            for name, with_ok, without_ok in pool.map(
                lambda d: _probe_one(d, config, toolchain, keep_sources),
                candidates,
            ):
                outcomes[name] = (with_ok, without_ok)
                done += 1
                if progress is not None:
                    progress(done, total)
    missing = [n for n, (w, wo) in outcomes.items() if not w and not wo]
    resolvable = [n for n, (_, wo) in outcomes.items() if wo]
    return SymbolReport(missing=missing, resolvable_without_target=resolvable)


def _probe_one(decl, config, toolchain, keep_sources=None):
    from ..wrapgen import generate_probe_source

    source = generate_probe_source(decl)
    if keep_sources:
        with open(os.path.join(keep_sources, f"probe_{decl.name}.c"), "w") as fh:
            fh.write(source)
    with tempfile.TemporaryDirectory(prefix=f"libwrap-probe-{decl.name}-") as tmp:
        src = os.path.join(tmp, "probe.c")
        obj = os.path.join(tmp, "probe.o")
        with open(src, "w") as fh:
            fh.write(source)
        proc = toolchain.run(["-fno-builtin", "-c", src, "-o", obj])
        if proc.returncode != 0:
            raise ToolchainError(
                f"probe source for {decl.name!r} did not compile",
                command=list(toolchain.cc) + ["-fno-builtin", "-c", src],
                output=proc.stdout + proc.stderr,
            )
        base = [obj] + list(config.linker_flags)
        with_target = toolchain.run(
            base + list(config.libs) + ["-o", os.path.join(tmp, "with")]
        )
        without_target = toolchain.run(base + ["-o", os.path.join(tmp, "without")])
    return decl.name, with_target.returncode == 0, without_target.returncode == 0
