"""Certified fixpoint solving for positive polynomial systems.

Computes rational inductive upper bounds on least fixpoints via
eigenvector-guided optimistic value iteration, verifies them in exact
arithmetic, and applies them to probabilistic pushdown automata and
recursive probabilistic programs (return probabilities, reachability,
output distributions, expected rewards).
"""

from .eigen import EigenEstimate, approx_eigenvec
from .errors import (
    ArityViolation,
    BudgetExhausted,
    DimensionMismatch,
    ExactCheckFailed,
    GuessBudgetExhausted,
    Infeasible,
    ParseError,
    PpscertError,
    SlackNegative,
    TranslateError,
    ZeroMatrix,
)
from .exact import (
    Certificate,
    RoundingGrain,
    Verdict,
    ceil_rational,
    check_inductive,
    k_induction_check,
    rationalize_and_verify,
    to_rational,
    verify_certificate_file,
)
from .frontend import parse_pps, parse_program, serialize_pps, translate
from .lower import IterState, gauss_seidel_step, improve_until, kleene_step
from .ovi import OviParams, SccSolution, SolveStats, guess, ovi_scc, solve, solve_with_stats
from .ppda import (
    Ppda,
    ReturnVarIndex,
    RewardModel,
    bad_state_transform,
    basic_certificate,
    normalize_arities,
    output_distribution_bounds,
    parse_ppda,
    return_pps,
    reward_pps,
    serialize_ppda,
    simulate_reach,
)
from .pps import DepGraph, Monomial, PolySystem, clean, dep_graph, evaluate, jacobian_at

__version__ = "0.1.0"

__all__ = [
    "ArityViolation", "BudgetExhausted", "Certificate", "DepGraph",
    "DimensionMismatch", "EigenEstimate", "ExactCheckFailed",
    "GuessBudgetExhausted", "Infeasible", "IterState", "Monomial",
    "OviParams", "ParseError", "PolySystem", "Ppda", "PpscertError",
    "ReturnVarIndex", "RewardModel", "RoundingGrain", "SccSolution",
    "SlackNegative", "SolveStats", "TranslateError", "Verdict", "ZeroMatrix",
    "approx_eigenvec", "bad_state_transform", "basic_certificate",
    "ceil_rational", "check_inductive", "clean", "dep_graph", "evaluate",
    "gauss_seidel_step", "guess", "improve_until", "jacobian_at",
    "k_induction_check", "kleene_step", "normalize_arities", "ovi_scc",
    "output_distribution_bounds", "parse_ppda", "parse_pps", "parse_program",
    "rationalize_and_verify", "return_pps", "reward_pps", "serialize_ppda",
    "serialize_pps", "simulate_reach", "solve", "solve_with_stats",
    "to_rational", "translate", "verify_certificate_file",
]
