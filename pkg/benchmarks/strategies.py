#!/usr/bin/env python3
"""Compare the eigenvector-guided and relative guess strategies.

Runs every program in benchmarks/programs plus the explicit systems in
benchmarks/pps under both strategies and prints outcome, guess count and
wall time per run.
"""

import argparse
import sys
from pathlib import Path

import ppscert as pc
from ppscert.bench import compare_strategies, format_table, solved_sets

ROOT = Path(__file__).resolve().parent


def load_corpus(include_pps=True):
    systems = []
    for path in sorted((ROOT / "programs").glob("*.ppl")):
        program = pc.parse_program(path.read_text(encoding="utf-8"))
        automaton, _, _ = pc.translate(program)
        systems.append((path.stem, pc.return_pps(automaton)[0]))
    if include_pps:
        for path in sorted((ROOT / "pps").glob("*.pps")):
            if path.stem == "infeasible":
                continue
            systems.append((path.stem, pc.parse_pps(path.read_text(encoding="utf-8"))))
    return systems


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epsilon", default="1e-3")
    parser.add_argument("--programs-only", action="store_true")
    args = parser.parse_args(argv)
    params = pc.OviParams(epsilon=args.epsilon.replace("//", "/"))
    rows = compare_strategies(load_corpus(not args.programs_only), params)
    print(format_table(rows))
    solved = solved_sets(rows)
    print()
    print(f"eigenvector certified: {len(solved['eigenvector'])}  "
          f"relative certified: {len(solved['relative'])}")
    extra = solved["relative"] - solved["eigenvector"]
    print("relative-only instances:", ", ".join(sorted(extra)) or "none")
    return 0


if __name__ == "__main__":
    sys.exit(main())
