"""Line-oriented check reports."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Check:
    id: str
    detail: str
    ok: bool

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'} {self.id} {self.detail}".rstrip()

    def porcelain(self):
        return f"check={self.id} status={'pass' if self.ok else 'fail'} detail={self.detail}"


class Report:
    def __init__(self, checks=()):
        self.checks = list(checks)

    def add(self, check_id, ok, detail=""):
        self.checks.append(Check(check_id, str(detail), bool(ok)))
        return ok

    def extend(self, other, prefix=""):
        for c in other.checks:
            self.checks.append(Check(prefix + c.id, c.detail, c.ok))

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def failed(self):
        return [c for c in self.sorted() if not c.ok]

    def sorted(self):
        return sorted(self.checks, key=lambda c: (c.id, c.detail))

    def render(self, porcelain=False):
        lines = [c.porcelain() if porcelain else c.line() for c in self.sorted()]
        return "\n".join(lines) + ("\n" if lines else "")
