"""Exception hierarchy shared by all toolkit modules."""


class LibwrapError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LibwrapError):
    """A configuration value or domain invariant was violated."""


class ParseError(LibwrapError):
    """Input text could not be parsed.

    Carries the source position when one is known so command-line output
    can point at the offending line.
    """

    def __init__(self, message, file=None, line=None):
        self.file = file
        self.line = line
        prefix = ""
        if file is not None:
            prefix = f"{file}:{line}: " if line is not None else f"{file}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class ToolchainError(LibwrapError):
    """A compiler or linker invocation failed.

    The exact command line and the tool's diagnostics are preserved
    verbatim so the failure can be reproduced by hand.
    """

    def __init__(self, message, command=None, output=None):
        self.command = list(command) if command else None
        self.output = output
        parts = [message]
        if self.command:
            parts.append("command: " + " ".join(self.command))
        if output:
            parts.append(output.rstrip())
        super().__init__("\n".join(parts))
