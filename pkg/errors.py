"""
Error types shared by every phase of the validation pipeline.
"""
from typing import Optional


class RvtError(Exception):
    """Base class for all tool errors."""
    pass


class ProjectError(RvtError):
    """Raised when a project file is malformed or violates a model invariant."""
    pass


class LangError(RvtError):
    """
    Front-end error for a single constraint.

    Args:
        message: Human-readable description
        kind: One of "lexical", "syntax", "name", "type"
        span: (start, end) character offsets into the constraint source
        req_id: Requirement owning the constraint, when known
    """

    def __init__(
        self,
        message: str,
        kind: str = "syntax",
        span: Optional[tuple] = None,
        req_id: Optional[str] = None,
    ):
        super().__init__(message)
        self.message = message
        self.kind = kind
        self.span = span
        self.req_id = req_id

    def with_requirement(self, req_id: str) -> "LangError":
        return LangError(self.message, self.kind, self.span, req_id)

    def __str__(self) -> str:
        where = ""
        if self.req_id:
            where += f"{self.req_id}"
        if self.span is not None:
            where += f"@{self.span[0]}-{self.span[1]}"
        return f"{where}: {self.message}" if where else self.message


class GroundError(RvtError):
    """Raised when finite instantiation cannot proceed."""
    pass


class DiscretizeError(RvtError):
    """Raised when a grounded atom cannot be expressed over discrete steps."""
    pass


class AutomataError(RvtError):
    """Raised when the automaton compiler meets a construct it does not handle."""
    pass


class SmtError(RvtError):
    """Raised on solver process failures and protocol parse errors."""
    pass


class EngineError(RvtError):
    """Raised when a satisfiability engine hits a configured limit."""

    def __init__(self, message: str, reason: str = "solver-unknown"):
        super().__init__(message)
        self.reason = reason


class TraceError(RvtError):
    """Raised when a witness violates the laws it is supposed to satisfy."""
    pass
