"""Toolkit for generating interception wrappers around C libraries.

The workflow mirrors a wrapper's life cycle: initialize a working
directory, aggregate the library headers, build and verify the wrapper
libraries, install them, and activate them when linking applications.
Wrapped calls are recorded by a small measurement runtime and rendered
as call-tree profiles.
"""

__version__ = "0.1.0"
