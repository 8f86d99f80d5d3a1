"""Comparison harness: eigenvector-guided guessing vs the relative update.

Runs the same systems under both guess strategies and reports outcome,
total guess count and wall time per run; used by the benchmark script and
the acceptance suite.
"""

from __future__ import annotations

import time

from .ovi import OviParams, solve_with_stats
from .pps import PolySystem

STRATEGIES = ("eigenvector", "relative")


def run_one(system: PolySystem, strategy: str, base: OviParams = OviParams()) -> dict:
    params = OviParams(
        epsilon=base.epsilon,
        c=base.c,
        d=base.d,
        max_guess_rounds=base.max_guess_rounds,
        strategy=strategy,
        update=base.update,
        iteration_budget=base.iteration_budget,
    )
    t0 = time.perf_counter()
    cert, stats = solve_with_stats(system, params)
    return {
        "strategy": strategy,
        "outcome": stats.outcome,
        "certified": cert is not None,
        "guesses": stats.total_guesses,
        "ms": (time.perf_counter() - t0) * 1000.0,
    }


def compare_strategies(named_systems, base: OviParams = OviParams()) -> list[dict]:
    rows = []
    for name, system in named_systems:
        for strategy in STRATEGIES:
            row = {"name": name, **run_one(system, strategy, base)}
            rows.append(row)
    return rows


def solved_sets(rows) -> dict[str, set]:
    out = {s: set() for s in STRATEGIES}
    for row in rows:
        if row["certified"]:
            out[row["strategy"]].add(row["name"])
    return out


def format_table(rows) -> str:
    header = f"{'benchmark':<18} {'strategy':<12} {'outcome':<22} {'G':>4} {'ms':>9}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['name']:<18} {row['strategy']:<12} {row['outcome']:<22} "
            f"{row['guesses']:>4} {row['ms']:>9.1f}"
        )
    return "\n".join(lines)
