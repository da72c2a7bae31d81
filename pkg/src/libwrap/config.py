"""Wrapper configuration: the anchor file every workflow step reads.

The configuration is persisted as a line-oriented ``key = value`` file
with repeated keys for list values, so it stays hand-editable and
diff-friendly.  Ellipsis mappings and the variadic-is-void set live here
too: this toolkit orchestrates the builds itself, so the config file is
the single source of truth rather than build-tool variables.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass, field, replace

from .errors import LibwrapError, ParseError, ValidationError

NAME_RE = re.compile(r"^[A-Za-z0-9_-]+$")
IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

DEFAULT_INSTALL_PREFIX = "~/.local/share/libwrap"

CONFIG_FILE = "wrapper.conf"
HEADER_AGGREGATE = "libwrap.h"
EXAMPLE_SOURCE = "main.c"
FILTER_FILE = "wrap.filter"
README_FILE = "README.md"


@dataclass
class WrapperConfig:
    name: str
    display_name: str = ""
    language: str = "c"
    preprocessor_flags: list[str] = field(default_factory=list)
    linker_flags: list[str] = field(default_factory=list)
    libs: list[str] = field(default_factory=list)
    ellipsis_mappings: dict[str, str] = field(default_factory=dict)
    variadic_is_void: set[str] = field(default_factory=set)
    install_prefix: str = DEFAULT_INSTALL_PREFIX

    def __post_init__(self):
        if not self.display_name:
            self.display_name = self.name
        self.validate()

    def validate(self) -> None:
        if not NAME_RE.match(self.name or ""):
            raise ValidationError(
                f"wrapper name {self.name!r} is invalid: use only letters, "
                "digits, '_' and '-'"
            )
        if self.language != "c":
            raise ValidationError(
                f"language {self.language!r} is not supported: this toolkit "
                "wraps C libraries only"
            )
        for label, values in (
            ("preprocessor_flags", self.preprocessor_flags),
            ("linker_flags", self.linker_flags),
            ("libs", self.libs),
        ):
            for v in values:
                if not v or v != v.strip() or "\n" in v:
                    raise ValidationError(
                        f"{label} entry {v!r} must be a single trimmed token"
                    )
        for key, value in self.ellipsis_mappings.items():
            if not IDENT_RE.match(key) or not IDENT_RE.match(value):
                raise ValidationError(
                    f"ellipsis mapping {key!r} -> {value!r} must map C identifiers"
                )
        for name in self.variadic_is_void:
            if not IDENT_RE.match(name):
                raise ValidationError(
                    f"variadic_is_void entry {name!r} is not a C identifier"
                )
        overlap = set(self.ellipsis_mappings) & self.variadic_is_void
        if overlap:
            raise ValidationError(
                "functions cannot be both ellipsis-mapped and variadic-is-void: "
                + ", ".join(sorted(overlap))
            )
        for label, value in (("display_name", self.display_name),
                             ("install_prefix", self.install_prefix)):
            if not value or "\n" in value or value != value.strip():
                raise ValidationError(f"{label} {value!r} must be a trimmed non-empty line")


def serialize_config(config: WrapperConfig) -> str:
    """Deterministic textual form; parse(serialize(c)) == c."""
    lines = ["# wrapper configuration (key = value; repeated keys form lists)"]
    lines.append(f"name = {config.name}")
    lines.append(f"display_name = {config.display_name}")
    lines.append(f"language = {config.language}")
    for flag in config.preprocessor_flags:
        lines.append(f"preprocessor_flag = {flag}")
    for flag in config.linker_flags:
        lines.append(f"linker_flag = {flag}")
    for lib in config.libs:
        lines.append(f"lib = {lib}")
    for key in sorted(config.ellipsis_mappings):
        lines.append(f"ellipsis_mapping = {key}:{config.ellipsis_mappings[key]}")
    for name in sorted(config.variadic_is_void):
        lines.append(f"variadic_is_void = {name}")
    lines.append(f"install_prefix = {config.install_prefix}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> WrapperConfig:
    fields: dict = {
        "preprocessor_flags": [], "linker_flags": [], "libs": [],
        "ellipsis_mappings": {}, "variadic_is_void": set(),
    }
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in ("name", "display_name", "language", "install_prefix"):
            fields[key] = value
        elif key == "preprocessor_flag":
            fields["preprocessor_flags"].append(value)
        elif key == "linker_flag":
            fields["linker_flags"].append(value)
        elif key == "lib":
            fields["libs"].append(value)
        elif key == "ellipsis_mapping":
            fn, sep, target = value.partition(":")
            if not sep:
                raise ParseError(
                    f"ellipsis_mapping needs 'function:vfunction', got {value!r}",
                    line=lineno,
                )
            fields["ellipsis_mappings"][fn.strip()] = target.strip()
        elif key == "variadic_is_void":
            fields["variadic_is_void"].add(value)
        else:
            raise ParseError(f"unknown configuration key {key!r}", line=lineno)
    if "name" not in fields:
        raise ParseError("configuration is missing 'name'")
    return WrapperConfig(**fields)


def merge_config(config: WrapperConfig, changes: dict) -> WrapperConfig:
    """Apply a partial update: lists append, maps and sets merge,
    scalars replace.  Values the update does not mention are unchanged."""
    updates: dict = {}
    for key, value in changes.items():
        if key in ("preprocessor_flags", "linker_flags", "libs"):
            updates[key] = list(getattr(config, key)) + list(value)
        elif key == "ellipsis_mappings":
            merged = dict(config.ellipsis_mappings)
            merged.update(value)
            updates[key] = merged
        elif key == "variadic_is_void":
            updates[key] = set(config.variadic_is_void) | set(value)
        elif key in ("name", "display_name", "language", "install_prefix"):
            updates[key] = value
        else:
            raise ValidationError(f"unknown configuration field {key!r}")
    return replace(config, **updates)


@dataclass
class WorkingDir:
    root: str
    header_aggregate: str
    example_source: str
    filter_file: str
    config_file: str

    @classmethod
    def at(cls, root) -> "WorkingDir":
        root = os.path.abspath(os.fspath(root))
        return cls(
            root=root,
            header_aggregate=os.path.join(root, HEADER_AGGREGATE),
            config_file=os.path.join(root, CONFIG_FILE),
            example_source=os.path.join(root, EXAMPLE_SOURCE),
            filter_file=os.path.join(root, FILTER_FILE),
        )

    @property
    def readme_file(self) -> str:
        return os.path.join(self.root, README_FILE)

    def paths(self) -> list[str]:
        return [self.root, self.header_aggregate, self.example_source,
                self.filter_file, self.config_file]

    def check_initialized(self) -> None:
        missing = [p for p in self.paths() if not os.path.exists(p)]
        if missing:
            raise LibwrapError(
                "working directory is not initialized (missing: "
                + ", ".join(missing) + "); run 'libwrap init' first"
            )

    def load_config(self) -> WrapperConfig:
        with open(self.config_file, encoding="utf-8") as fh:
            return parse_config(fh.read())

    def save_config(self, config: WrapperConfig) -> None:
        atomic_write(self.config_file, serialize_config(config))


def atomic_write(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".libwrap-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def init_working_dir(config: WrapperConfig, dest) -> WorkingDir:
    """Scaffold a new working directory.

    Refuses to touch a non-empty destination so a stray re-run can never
    clobber the user's edited header, example or filter.
    """
    dest = os.path.abspath(os.fspath(dest))
    if os.path.exists(dest) and os.listdir(dest):
        raise LibwrapError(
            f"destination {dest} is not empty; refusing to overwrite an "
            "existing working directory (use 'libwrap init --update' to "
            "change its configuration)"
        )
    config.validate()
    os.makedirs(dest, exist_ok=True)
    wd = WorkingDir.at(dest)
    atomic_write(wd.config_file, serialize_config(config))
    atomic_write(wd.header_aggregate, _stub_header(config))
    atomic_write(wd.example_source, _stub_example(config))
    atomic_write(wd.filter_file, _stub_filter())
    atomic_write(wd.readme_file, _working_dir_readme(config))
    return wd


def update_config(wd: WorkingDir, changes: dict) -> WrapperConfig:
    """Merge a partial update into the persisted config, atomically.

    A merge that violates an invariant raises before the file is
    rewritten, so the old configuration stays intact.
    """
    wd.check_initialized()
    merged = merge_config(wd.load_config(), changes)
    merged.validate()
    wd.save_config(merged)
    return merged


def next_steps(wd: WorkingDir, config: WrapperConfig) -> str:
    return f"""Initialized wrapper '{config.name}' in {wd.root}

Next steps:
  1. Add one #include line per target-library header to {HEADER_AGGREGATE}.
  2. Write a small program using the target library in {EXAMPLE_SOURCE}.
  3. Run 'libwrap build {wd.root}' to create the wrapper libraries.
  4. If build reports a symbol mismatch, run 'libwrap check {wd.root}'
     and extend {FILTER_FILE} with the suggested exclusions.
  5. Run 'libwrap install {wd.root}', then 'libwrap installcheck {wd.root}'.

{README_FILE} in the working directory documents each step and the
warnings and errors you may encounter."""


def _stub_header(config: WrapperConfig) -> str:
    return f"""/* Umbrella header for the '{config.name}' wrapper.
 *
 * Add an #include line for each header an application would include
 * from the target library, in the usual order, e.g.
 *
 *     #include <fftw3.h>
 *
 * Preprocessor macros may be defined between includes if the library
 * expects that.
 */
"""


def _stub_example(config: WrapperConfig) -> str:
    return f"""/* Example application for the '{config.name}' wrapper.
 *
 * Write a minimal program that uses the target library.  It is
 * compiled, linked and executed to verify that the library and the
 * generated wrappers work.
 */

int main(void) {{
    return 0;
}}
"""


def _stub_filter() -> str:
    return """# Wrap-plan filter.
#
# Lines are 'INCLUDE <glob>' or 'EXCLUDE <glob>'; later rules override
# earlier ones.  'FILES:' and 'FUNCTIONS:' switch what the patterns
# apply to (files is the default).  Without any matching file rule,
# only declarations from directories named by -I flags are wrapped.
#
# FILES:
# INCLUDE /usr/include/mylib/*
# FUNCTIONS:
# EXCLUDE mylib_internal_*
"""


def _working_dir_readme(config: WrapperConfig) -> str:
    return f"""# Wrapper working directory: {config.display_name}

This directory drives the creation of the '{config.name}' library
wrapper.  Work through the steps below; every command prints what to do
next when something needs attention.

## Files

- `{CONFIG_FILE}` - wrapper configuration ({_README_CONF_HINT})
- `{HEADER_AGGREGATE}` - umbrella header; add one #include per library header
- `{EXAMPLE_SOURCE}` - small example program using the target library
- `{FILTER_FILE}` - include/exclude rules choosing the functions to wrap

## Steps

1. `libwrap build <dir>` - links the example against the target library
   (a failure here means the example or the configuration is wrong),
   analyzes the umbrella header, applies the filter and generates and
   compiles the wrapper libraries (static/shared x link-time/runtime).
2. `libwrap check <dir>` - when build reports a mismatch between header
   declarations and library symbols, check probe-compiles every
   candidate and writes two lists: symbols missing from the target
   library and symbols that resolve even without it.  Append the
   printed filter fragment to `{FILTER_FILE}` and re-run build.
3. `libwrap install <dir>` / `libwrap installcheck <dir>` - install the
   wrapper and verify the installed artifacts by building and running
   the example with each wrapping method.
4. `libwrap link --libwrap={config.name} <compile command>` - activate the
   wrapper in your application's link step.

## Warnings you may see

- *ellipsis arguments*: a variadic function cannot be forwarded in C;
  map it to its va_list counterpart with
  `ellipsis_mapping = func:vfunc` in `{CONFIG_FILE}`, or leave it
  unwrapped.
- *empty parentheses*: a declaration like `int f()` has an unknown
  argument list.  If it truly takes no arguments, add
  `variadic_is_void = f`.
- *inline or static*: such functions may have no out-of-line symbol;
  calls the compiler inlines cannot be intercepted.
"""


_README_CONF_HINT = "edit by hand or via 'libwrap init --update'"
