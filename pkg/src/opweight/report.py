"""Pass/fail records produced by the verification routines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


def _round(x: float) -> float:
    # six significant digits keeps reports byte-stable across BLAS summation orders
    return float(f"{float(x):.6e}")


@dataclass(frozen=True)
class Check:
    label: str
    passed: bool
    residual: float
    threshold: float | None = None
    witness: Any = None
    skipped: str | None = None

    def to_json(self) -> dict:
        out = {"check": self.label, "pass": bool(self.passed), "residual": _round(self.residual),
               "witness": self.witness}
        if self.threshold is not None:
            out["threshold"] = _round(self.threshold)
        if self.skipped is not None:
            out["skipped"] = self.skipped
        return out


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    def bound(self, label: str, residual: float, threshold: float, witness: Any = None) -> Check:
        """Record ``residual <= threshold``."""
        residual = float(residual)
        c = Check(label, bool(residual <= threshold), residual, float(threshold), witness)
        self.checks.append(c)
        return c

    def flag(self, label: str, passed: bool, residual: float = 0.0, witness: Any = None) -> Check:
        c = Check(label, bool(passed), float(residual), None, witness)
        self.checks.append(c)
        return c

    def skip(self, label: str, reason: str) -> Check:
        """Record a check that does not apply, with the reason; it does not fail the report."""
        c = Check(label, True, 0.0, None, None, reason)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = "") -> "Report":
        for c in other.checks:
            self.checks.append(Check(prefix + c.label, c.passed, c.residual, c.threshold, c.witness, c.skipped))
        return self

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, label: str) -> Check:
        for c in self.checks:
            if c.label == label:
                return c
        raise KeyError(label)

    def __contains__(self, label: str) -> bool:
        return any(c.label == label for c in self.checks)

    def sorted_checks(self) -> list[Check]:
        return sorted(self.checks, key=lambda c: c.label)

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self.sorted_checks()]

    def to_text(self) -> str:
        lines = []
        for c in self.sorted_checks():
            if c.skipped is not None:
                lines.append(f"SKIP  {c.label}  ({c.skipped})")
                continue
            bound = "" if c.threshold is None else f" (<= {_round(c.threshold):.1e})"
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.label}  residual={_round(c.residual):.6e}{bound}")
        return "\n".join(lines)
