"""Residual checks and the reports built from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from .expr import Chart, Expr, zero_test


@dataclass
class Check:
    name: str
    status: str  # "pass" | "fail" | "skipped"
    max_abs: float = 0.0
    max_ratio: float = 0.0
    n_points: int = 0
    seed: int | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict[str, Any]:
        out = {
            "name": self.name,
            "status": self.status,
            "max_residual": self.max_abs,
            "max_relative_residual": self.max_ratio,
            "samples": self.n_points,
            "seed": self.seed,
        }
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add(self, item: "Check | Report") -> None:
        if isinstance(item, Report):
            self.checks.extend(item.checks)
            self.notes.extend(n for n in item.notes if n not in self.notes)
        else:
            self.checks.append(item)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_abs(self) -> float:
        return max((c.max_abs for c in self.checks), default=0.0)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "status": "pass" if self.passed else "fail",
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
        }


def check_exprs(name: str, exprs: Sequence[Expr], chart: Chart, sampling) -> Check:
    """Zero-test a batch of expressions on shared sample points."""
    res = zero_test(list(exprs), chart, sampling.n_points, sampling.tol, sampling.seed)
    return Check(name, "pass" if res.passed else "fail", res.max_abs, res.max_ratio, res.n_points, res.seed)
