"""Diagnostics shared by the parsing, graph and corpus layers."""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Diagnostic:
    """A single validation finding. Diagnostics are data, not exceptions."""

    rule: str
    message: str
    subject: Optional[str] = None  # node/token id, sent_id, cxn id, ...

    def __str__(self) -> str:
        if self.subject is not None:
            return f"[{self.rule}] {self.subject}: {self.message}"
        return f"[{self.rule}] {self.message}"

    def to_dict(self) -> dict:
        return {"rule": self.rule, "subject": self.subject, "message": self.message}
