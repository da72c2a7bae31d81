"""Header analysis: preprocess the umbrella header and extract C declarations."""

from .typeexpr import TypeExpr, Param
from .parser import FunctionDecl, Location, ScanResult, parse_declarations, scan_text
from .preprocess import preprocess
from .analyze import UnwrappableWarning, scan_header, warn_unwrappable

__all__ = [
    "TypeExpr",
    "Param",
    "FunctionDecl",
    "Location",
    "ScanResult",
    "parse_declarations",
    "scan_text",
    "preprocess",
    "UnwrappableWarning",
    "scan_header",
    "warn_unwrappable",
]
