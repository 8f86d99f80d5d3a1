"""Machine- and human-readable run reports for the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .ovi import SolveStats

# stripped when comparing reports for determinism
TIMING_FIELDS = ("wall_ms", "exact_ms", "exact_share", "total_ms")


@dataclass
class RunReport:
    outcome: str
    input_path: str
    backend: str
    stats: SolveStats
    epsilon: Fraction
    certificate_path: str | None = None
    avg_digits: float | None = None
    output_bounds: dict | None = None
    reward: dict | None = None
    total_ms: float = 0.0

    def as_dict(self) -> dict:
        per_scc = [
            {
                "index": s.index,
                "size": s.size,
                "kind": s.kind,
                "strategy": s.strategy,
                "guesses": s.guesses,
                "iterations": s.iterations,
            }
            for s in self.stats.sccs
        ]
        out = {
            "outcome": self.outcome,
            "input": self.input_path,
            "backend": self.backend,
            "epsilon": _frac(self.epsilon),
            "vars": self.stats.n_vars,
            "terms": self.stats.n_terms,
            "zero_vars": self.stats.zero_vars,
            "sccs": self.stats.scc_count,
            "nontrivial_sccs": self.stats.nontrivial_sccs,
            "scc_max": self.stats.scc_max,
            "per_scc": per_scc,
            "guesses": self.stats.total_guesses,
            "iterations": self.stats.total_iterations,
            "retries": self.stats.retries,
            "gap": self.stats.gap,
            "k_used": self.stats.k_used,
            "avg_digits": self.avg_digits,
            "certificate": self.certificate_path,
            "wall_ms": round(self.stats.wall_ms, 3),
            "exact_ms": round(self.stats.exact_ms, 3),
            "exact_share": round(self.stats.exact_share, 4),
            "total_ms": round(self.total_ms, 3),
        }
        if self.stats.failure_reason:
            out["failure"] = {
                "reason": self.stats.failure_reason,
                "coordinate": self.stats.failure_coordinate,
                "scc": self.stats.failure_scc,
                "rho_estimate": self.stats.rho_estimate,
            }
        if self.output_bounds is not None:
            out["output_bounds"] = {
                state: {"lower": _frac(lo), "upper": _frac(hi)}
                for state, (lo, hi) in self.output_bounds.items()
            }
        if self.reward is not None:
            out["reward"] = self.reward
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    def render_text(self) -> str:
        lines = [f"outcome: {self.outcome}"]
        lines.append(
            f"system: {self.stats.n_vars} vars, {self.stats.n_terms} terms, "
            f"{self.stats.zero_vars} zero-cleaned, "
            f"{self.stats.nontrivial_sccs} non-trivial SCCs (max size {self.stats.scc_max})"
        )
        lines.append(
            f"solver: {self.stats.total_guesses} guesses, "
            f"{self.stats.total_iterations} iterations, k={self.stats.k_used}, "
            f"gap {self.stats.gap:.2e}"
        )
        lines.append(
            f"time: {self.stats.wall_ms:.1f} ms total, "
            f"{100 * self.stats.exact_share:.0f}% exact arithmetic "
            f"[{self.backend} backend]"
        )
        if self.avg_digits is not None:
            lines.append(f"certificate: {self.certificate_path} (avg {self.avg_digits:.1f} digits)")
        if self.stats.failure_reason:
            lines.append(f"failure: {self.stats.failure_reason}")
            if self.stats.rho_estimate is not None:
                lines.append(f"  estimated spectral radius at failure: {self.stats.rho_estimate:.6f}")
        if self.output_bounds is not None:
            lines.append("output distribution bounds:")
            for state, (lo, hi) in self.output_bounds.items():
                lines.append(f"  {state}: [{float(lo):.6f}, {float(hi):.6f}]")
        if self.reward is not None:
            lines.append(f"expected-reward certificate: {self.reward.get('certificate')}")
        return "\n".join(lines) + "\n"


def average_digits(values) -> float:
    total = 0
    count = 0
    for q in values:
        total += max(len(str(abs(q.numerator))), len(str(q.denominator)))
        count += 1
    return total / count if count else 0.0


def _frac(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"
