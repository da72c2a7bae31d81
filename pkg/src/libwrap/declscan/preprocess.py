"""Run the user's compiler as a preprocessor over the umbrella header.

Compile-time conditionals can change which functions a header declares,
so the expansion must come from the same compiler and flags used to
build against the target library.  Line markers are kept: they attribute
every declaration to its home header, which both location reporting and
the default include-directory filter depend on.
"""

from __future__ import annotations

import os

from ..errors import ToolchainError
from ..toolchain import run


def preprocess(config, header_aggregate, preprocessor_command, echo: bool = False) -> str:
    """Expand ``header_aggregate`` and return the translation unit text.

    ``preprocessor_command`` is the compiler driver argv prefix; the
    config's preprocessor flags (include dirs, defines, an explicit
    ``-std=`` if the user set one) are forwarded unchanged.
    """
    header_aggregate = os.fspath(header_aggregate)
    if not os.path.exists(header_aggregate):
        raise ToolchainError(f"header aggregate not found: {header_aggregate}")
    command = (
        list(preprocessor_command)
        + ["-E"]
        + list(config.preprocessor_flags)
        + ["-x", "c", header_aggregate]
    )
    proc = run(command, echo=echo)
    if proc.returncode != 0:
        raise ToolchainError(
            f"preprocessing {header_aggregate} failed (exit {proc.returncode})",
            command=command,
            output=proc.stderr,
        )
    return proc.stdout
