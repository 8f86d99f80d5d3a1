"""Command line interface: certify, check, translate.

Exit codes: 0 on success (certified / valid), 1 when the requested
guarantee could not be established (reason in the report), 2 on input
errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import backends
from .errors import ParseError, TranslateError
from .exact import Certificate, verify_certificate_file
from .frontend import parse_pps, parse_program, serialize_pps, translate
from .ovi import OviParams, solve_with_stats
from .ppda import (
    RewardModel,
    bad_state_transform,
    normalize_arities,
    output_distribution_bounds,
    parse_ppda,
    return_pps,
    reward_pps,
    serialize_ppda,
)
from .report import RunReport, average_digits


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, TranslateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppscert",
        description="Certified rational upper bounds on least fixpoints of "
        "positive polynomial systems, pPDA return probabilities, and "
        "recursive probabilistic programs.",
    )
    sub = parser.add_subparsers(required=True)

    cert = sub.add_parser("certify", help="solve and emit a verified certificate")
    cert.add_argument("input", help=".pps, .ppda or .ppl file; '-' reads a .pps from stdin")
    cert.add_argument("--epsilon", default="1e-3", help="target max-norm gap (default 1e-3)")
    cert.add_argument("--c", type=float, default=0.1, help="tolerance decay factor in (0,1)")
    cert.add_argument("--d", type=float, default=0.5, help="guess shrink factor in (0,1)")
    cert.add_argument("--max-guesses", type=int, default=10, help="guess rounds per SCC")
    cert.add_argument("--strategy", choices=["eigenvector", "relative"], default="eigenvector")
    cert.add_argument("--update", choices=["gauss-seidel", "kleene"], default="gauss-seidel")
    cert.add_argument("--kmax", type=int, default=10, help="k-induction depth cap")
    cert.add_argument("--assume-ast", action="store_true",
                      help="derive output-distribution lower bounds assuming almost-sure termination")
    cert.add_argument("--bad-state", metavar="STATE",
                      help="bound the probability of ever reaching STATE")
    cert.add_argument("--reward", metavar="FILE",
                      help="reward model file; also certify expected rewards")
    cert.add_argument("--normalize-arities", action="store_true",
                      help="rewrite arity-1 rules before building the reward system")
    cert.add_argument("--report", choices=["text", "json"], default="text")
    cert.add_argument("--out", help="certificate output path (default: <input>.cert)")
    cert.add_argument("--jobs", type=int, default=1, help="concurrent independent-SCC solves")
    cert.set_defaults(func=cmd_certify)

    chk = sub.add_parser("check", help="verify a certificate file against a system")
    chk.add_argument("system", help=".pps or .ppda file")
    chk.add_argument("certificate", help="certificate file")
    chk.set_defaults(func=cmd_check)

    tr = sub.add_parser("translate", help="compile a program to .ppda and .pps files")
    tr.add_argument("input", help=".ppl file")
    tr.add_argument("--out-ppda", help="pPDA output path (default: <input>.ppda)")
    tr.add_argument("--out-pps", help="PPS output path (default: <input>.pps)")
    tr.set_defaults(func=cmd_translate)
    return parser


def _load_system(path_text: str, bad_state=None):
    """Returns (system, automaton | None, init | None, display name)."""
    if path_text == "-":
        return parse_pps(sys.stdin.read()), None, None, "<stdin>"
    path = Path(path_text)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".ppl":
        program = parse_program(text)
        automaton, init, _ = translate(program)
    elif path.suffix == ".ppda":
        automaton, init = parse_ppda(text)
    else:
        system = parse_pps(text)
        if bad_state:
            raise TranslateError("--bad-state needs a pPDA or program input")
        return system, None, None, str(path)
    if bad_state:
        automaton = bad_state_transform(automaton, bad_state)
    system, _ = return_pps(automaton)
    return system, automaton, init, str(path)


def cmd_certify(args) -> int:
    t0 = time.perf_counter()
    params = OviParams(
        epsilon=_parse_epsilon(args.epsilon),
        c=args.c,
        d=args.d,
        max_guess_rounds=args.max_guesses,
        strategy=args.strategy,
        update=args.update,
    )
    system, automaton, init, name = _load_system(args.input, args.bad_state)
    cert, stats = solve_with_stats(system, params, k_max=args.kmax, jobs=args.jobs)
    report = RunReport(
        outcome=stats.outcome,
        input_path=name,
        backend=backends.name(),
        stats=stats,
        epsilon=params.epsilon,
    )
    if cert is not None:
        out_path = args.out or _default_out(args.input, ".cert")
        cert.save(out_path)
        report.certificate_path = str(out_path)
        report.avg_digits = average_digits(cert.upper)
        if automaton is not None and init is not None:
            report.output_bounds = output_distribution_bounds(
                automaton, init, cert, assume_ast=args.assume_ast
            )
        if args.reward:
            report.reward = _certify_rewards(args, automaton, cert, params)
    report.total_ms = (time.perf_counter() - t0) * 1000.0
    sys.stdout.write(report.to_json() if args.report == "json" else report.render_text())
    return 0 if stats.outcome == "Certified" else 1


def _certify_rewards(args, automaton, cert, params):
    if automaton is None:
        raise TranslateError("--reward needs a pPDA or program input")
    rewards = _parse_reward_file(Path(args.reward).read_text(encoding="utf-8"), automaton)
    if args.normalize_arities:
        automaton = normalize_arities(automaton)
        system, _ = return_pps(automaton)
        rcert, rstats = solve_with_stats(system, params, k_max=args.kmax)
        if rcert is None:
            return {"outcome": rstats.outcome, "certificate": None}
        cert = rcert
    system, _ = reward_pps(automaton, rewards, cert)
    rcert, rstats = solve_with_stats(system, params, k_max=args.kmax)
    entry = {"outcome": rstats.outcome, "certificate": None}
    if rcert is not None:
        path = _default_out(args.input, ".reward.cert")
        rcert.save(path)
        entry["certificate"] = str(path)
        entry["avg_digits"] = average_digits(rcert.upper)
    return entry


def _parse_reward_file(text: str, automaton) -> RewardModel:
    rewards = {}
    default = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected '<state> <value>' per line", ln)
        state, value = parts
        try:
            value = Fraction(value.replace("//", "/"))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"malformed reward {parts[1]!r}", ln) from None
        if state == "*":
            default = value
        else:
            rewards[state] = value
    if default is not None:
        for q in automaton.states:
            rewards.setdefault(q, default)
    return RewardModel(rewards)


def cmd_check(args) -> int:
    system, _, _, _ = _load_system(args.system)
    try:
        cert = Certificate.load(args.certificate)
    except ParseError as exc:
        print(f"Invalid: {exc}")
        return 1
    verdict = verify_certificate_file(system, cert)
    if verdict.ok:
        print("Valid")
        return 0
    suffix = ""
    if verdict.coordinate and verdict.coordinate not in (verdict.reason or ""):
        suffix = f" ({verdict.coordinate})"
    print(f"Invalid: {verdict.reason}{suffix}")
    return 1


def cmd_translate(args) -> int:
    path = Path(args.input)
    program = parse_program(path.read_text(encoding="utf-8"))
    automaton, init, value_map = translate(program)
    system, _ = return_pps(automaton)
    out_ppda = args.out_ppda or _default_out(args.input, ".ppda")
    out_pps = args.out_pps or _default_out(args.input, ".pps")
    Path(out_ppda).write_text(serialize_ppda(automaton, init), encoding="utf-8")
    Path(out_pps).write_text(serialize_pps(system), encoding="utf-8")
    print(f"pPDA: {out_ppda} ({len(automaton.states)} states, "
          f"{len(automaton.alphabet)} stack symbols)")
    print(f"PPS:  {out_pps} ({system.n} variables)")
    print("return states: " + ", ".join(f"{k} = {v}" for k, v in value_map.items()))
    return 0


def _default_out(input_path: str, suffix: str) -> str:
    if input_path == "-":
        return "stdin" + suffix
    path = Path(input_path)
    return str(path.with_suffix(path.suffix + suffix))


def _parse_epsilon(text: str) -> Fraction:
    # accepts 1/1000, 1//1000, 0.001 and 1e-3, all exactly
    try:
        return Fraction(text.replace("//", "/"))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"malformed epsilon {text!r}") from None


if __name__ == "__main__":
    sys.exit(main())
