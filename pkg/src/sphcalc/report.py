"""Pass/fail records for checked inequalities and identities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class BoundReport:
    """One checked inequality or identity.

    ``margin = rhs - lhs``; the check passes iff ``margin >= -tol``.  For
    inequality checks ``tol`` is 0 (no slack beyond the bound itself); for
    equality checks ``lhs`` is the observed deviation and ``rhs`` the allowed
    one.  ``details`` may carry scan tables for informational reports.
    """

    check: str
    anchor: str
    lhs: float
    rhs: float
    tol: float = 0.0
    seed: int | None = None
    lmax: int | None = None
    n: int | None = None
    informational: bool = False
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if self.informational:
            return True
        return self.margin >= -self.tol

    def to_record(self) -> dict:
        rec = {
            "check": self.check,
            "anchor": self.anchor,
            "lhs": _jsonable(self.lhs),
            "rhs": _jsonable(self.rhs),
            "margin": _jsonable(self.margin),
            "tol": self.tol,
            "pass": self.passed,
            "seed": self.seed,
            "lmax": self.lmax,
            "n": self.n,
        }
        if self.informational:
            rec["informational"] = True
        if self.details:
            rec["details"] = self.details
        return rec

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        if self.informational:
            verdict = "info"
        return (
            f"[{verdict}] {self.check}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} "
            f"margin={self.margin:.3g}  ({self.anchor})"
        )


def _jsonable(x: float) -> float | None:
    # json cannot encode nan/inf
    return x if math.isfinite(x) else None
