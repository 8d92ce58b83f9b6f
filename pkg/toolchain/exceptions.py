"""Errors raised by the mini-Verilog frontend and the toolchain backends."""


class ToolchainError(Exception):
    """Base class for every toolchain failure."""


class VerilogSyntaxError(ToolchainError):
    """Source text outside the supported combinational subset."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self):
        if self.line is None:
            return self.message
        return f"line {self.line}, column {self.column}: {self.message}"


class ElaborationError(ToolchainError):
    """The module parsed but cannot be lowered to gates."""


class PortMismatch(ToolchainError):
    """A vector table header disagrees with the module ports."""


class VectorTableError(ToolchainError):
    """Malformed vector table text."""


class ToolUnavailable(ToolchainError):
    """An external tool is not installed or not on PATH."""

    def __init__(self, tool):
        self.tool = tool
        super().__init__(f"external tool not found: {tool}")


class StageTimeout(ToolchainError):
    """A stage exceeded its wall-clock limit."""

    def __init__(self, stage, seconds):
        self.stage = stage
        self.seconds = seconds
        super().__init__(f"TIMEOUT: {stage} exceeded {seconds:g}s")


class ReportParseError(ToolchainError):
    """Synthesis ran but the PPA metrics could not be extracted."""
