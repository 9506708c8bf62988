"""Inequality records shared by the report builders."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

Number = Fraction | int | float


@dataclass(frozen=True)
class Check:
    """``lhs <= rhs`` (or ``lhs == rhs`` when ``equality``), evaluated once.

    Exact operands are compared exactly; if either side is a float the
    comparison allows ``tol``.
    """

    name: str
    lhs: Number
    rhs: Number
    holds: bool
    equality: bool = False

    @property
    def slack(self) -> float:
        """Room left in the inequality; for equalities, minus the gap."""
        if self.equality:
            return 0.0 - abs(float(self.rhs) - float(self.lhs))
        return float(self.rhs) - float(self.lhs)


def leq(name: str, lhs: Number, rhs: Number, tol: float = 1e-9) -> Check:
    if isinstance(lhs, float) or isinstance(rhs, float):
        return Check(name, lhs, rhs, float(lhs) <= float(rhs) + tol)
    return Check(name, lhs, rhs, lhs <= rhs)


def eq(name: str, lhs: Number, rhs: Number, tol: float = 1e-9) -> Check:
    if isinstance(lhs, float) or isinstance(rhs, float):
        return Check(name, lhs, rhs, abs(float(lhs) - float(rhs)) <= tol, equality=True)
    return Check(name, lhs, rhs, lhs == rhs, equality=True)
