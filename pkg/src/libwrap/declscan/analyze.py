"""Post-parse analysis: which declarations cannot be wrapped, and why.

Two classes of functions need special handling.  Inline or static
functions may have no out-of-line symbol to intercept; they stay in the
candidate list but carry a warning.  Variadic functions cannot be
forwarded in C unless the user maps them to a ``v``-version that takes a
``va_list``, so unmapped ones are warned about and dropped.  A function
declared with empty parentheses has an unknown argument list and is
treated like an unmapped variadic unless the user asserts it truly takes
no arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

from .parser import ScanResult, scan_text
from .preprocess import preprocess


@dataclass(frozen=True)
class UnwrappableWarning:
    kind: str            # inline | variadic-unmapped | unknown-args
    function: str
    message: str
    excluded: bool

    def __str__(self):
        return f"warning: {self.message}"


def warn_unwrappable(decls, ellipsis_mappings=None, variadic_is_void=None):
    """Warnings for declarations that cannot be wrapped as-is.

    Returns a list of :class:`UnwrappableWarning`; entries with
    ``excluded=True`` must not make it into a wrap plan.
    """
    mappings = ellipsis_mappings or {}
    void_set = set(variadic_is_void or ())
    warnings = []
    for decl in decls:
        where = f"{decl.location.file}:{decl.location.line}"
        if decl.is_inline_or_static:
            warnings.append(UnwrappableWarning(
                kind="inline",
                function=decl.name,
                message=(f"{decl.name} ({where}) is declared inline or static; "
                         "calls may be inlined and escape interception"),
                excluded=False,
            ))
        if decl.variadic and decl.name not in mappings:
            warnings.append(UnwrappableWarning(
                kind="variadic-unmapped",
                function=decl.name,
                message=(f"{decl.name} ({where}) has an ellipsis argument and no "
                         "ellipsis mapping; variadic calls cannot be forwarded "
                         "in C, so it is excluded"),
                excluded=True,
            ))
        if decl.empty_parens_unknown_args and decl.name not in void_set:
            warnings.append(UnwrappableWarning(
                kind="unknown-args",
                function=decl.name,
                message=(f"{decl.name} ({where}) is declared with empty "
                         "parentheses, so its argument list is unknown; add it "
                         "to variadic_is_void if it takes no arguments, "
                         "otherwise it is excluded"),
                excluded=True,
            ))
    return warnings


def scan_header(config, header_aggregate, preprocessor_command, echo=False) -> ScanResult:
    """Preprocess the umbrella header and parse the declarations."""
    text = preprocess(config, header_aggregate, preprocessor_command, echo=echo)
    return scan_text(text, filename=str(header_aggregate))
