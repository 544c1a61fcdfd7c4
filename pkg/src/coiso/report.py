"""Pass/fail records carrying exact residuals."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


def residual_text(obj) -> str:
    """Stringify a residual; exact zeros become the empty string."""
    if obj is None:
        return ""
    if hasattr(obj, "is_zero") and obj.is_zero():
        return ""
    if isinstance(obj, (list, tuple)):
        parts = [residual_text(o) for o in obj]
        return "; ".join(p for p in parts if p)
    return str(obj)


@dataclass
class Check:
    name: str
    status: str  # "pass" | "fail" | "skip"
    residual: str = ""
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    @classmethod
    def exact_zero(cls, name: str, residual, **detail) -> "Check":
        text = residual_text(residual)
        return cls(name, "fail" if text else "pass", text, detail)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "status": self.status, "residual": self.residual}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"title": self.title, "passed": self.passed, "checks": [c.to_json() for c in self.checks]}

    def __str__(self):
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            line = f"  [{c.status}] {c.name}"
            if c.residual:
                line += f"  residual: {c.residual}"
            lines.append(line)
        return "\n".join(lines)
