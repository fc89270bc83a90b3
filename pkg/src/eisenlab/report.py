"""Structured results of identity checks.

Every verification produces a MomentReport carrying both route values,
never just a verdict, so CSV artifacts stay auditable.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class MomentReport:
    """Two-route identity check result.

    passed is defined as (abs_diff <= tol) or (rel_diff <= tol); tol is the
    combined tolerance declared by the check (quadrature estimates, series
    tails, and any caller-requested tolerance folded together).
    """

    label: str
    route_a: complex
    route_b: complex
    tol: float
    seconds: float = 0.0
    components: dict = field(default_factory=dict)

    @property
    def abs_diff(self) -> float:
        return abs(self.route_a - self.route_b)

    @property
    def rel_diff(self) -> float:
        scale = max(abs(self.route_a), abs(self.route_b))
        if scale == 0.0:
            return 0.0
        return self.abs_diff / scale

    @property
    def passed(self) -> bool:
        return self.abs_diff <= self.tol or self.rel_diff <= self.tol

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.label}: route_a={self.route_a:.12g} "
            f"route_b={self.route_b:.12g} abs_diff={self.abs_diff:.3e} "
            f"rel_diff={self.rel_diff:.3e} tol={self.tol:.3e} "
            f"({self.seconds:.2f}s)"
        )
