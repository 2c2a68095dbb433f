"""Shared result types for hypothesis checks and theorem verdicts."""
from __future__ import annotations

from dataclasses import dataclass, field

# Strict inequalities in theorem hypotheses are decided only after inflating
# the estimated left-hand side by this factor, since every norm and seminorm
# here is a grid estimate and therefore a lower bound of the true value.
SAFETY = 1.05

PASS = "pass"
FAIL = "fail"
INDETERMINATE = "indeterminate"


def decide(lhs: float, rhs: float, safety: float = SAFETY) -> str:
    """Verdict for a strict inequality lhs < rhs with the estimator safety factor."""
    return PASS if lhs * safety < rhs else FAIL


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one theorem-hypothesis check.

    lhs and rhs are the two sides of the decisive inequality, constants holds
    every intermediate quantity that went into them.
    """

    tag: str
    lhs: float
    rhs: float
    verdict: str
    constants: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def as_dict(self) -> dict:
        return {
            "tag": self.tag,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "verdict": self.verdict,
            "constants": dict(sorted(self.constants.items())),
            "note": self.note,
        }


@dataclass(frozen=True)
class TheoremVerdict:
    """One theorem applied to one system.

    prediction is a single value, an (inclusive) interval, or None when the
    hypothesis did not pass and nothing is asserted.  agreement is None when
    the theorem is inapplicable, never False in that case.
    """

    tag: str
    hypothesis: tuple[ConditionReport, ...]
    prediction: float | tuple[float, float] | None
    estimate: float | None
    tolerance: float
    agreement: bool | None
    note: str = ""

    def as_dict(self) -> dict:
        pred: float | list[float] | None
        if isinstance(self.prediction, tuple):
            pred = list(self.prediction)
        else:
            pred = self.prediction
        return {
            "tag": self.tag,
            "hypothesis": [h.as_dict() for h in self.hypothesis],
            "prediction": pred,
            "estimate": self.estimate,
            "tolerance": self.tolerance,
            "agreement": self.agreement,
            "note": self.note,
        }
