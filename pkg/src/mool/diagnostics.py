from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[tuple[int, int]] = None
    rule: str = ""
    severity: str = "error"

    def to_dict(self) -> dict:
        start, end = self.span if self.span else (0, 0)
        return {
            "code": self.code,
            "severity": self.severity,
            "rule": self.rule,
            "message": self.message,
            "span": {"start": start, "end": end},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __str__(self):
        where = f"{self.span[0]}-{self.span[1]}" if self.span else "-"
        rule = f" [{self.rule}]" if self.rule else ""
        return f"{self.severity}: {where}: {self.code}{rule}: {self.message}"


class ParseError(Exception):
    """Raised by the parser; carries one or more diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics
