"""Exception types shared across the solver pipeline."""


class PpscertError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(PpscertError):
    pass


class BudgetExhausted(PpscertError):
    """Lower-bound iteration ran out of its step budget.

    Carries the last iteration state so the caller can decide whether to
    give up or continue with a fresh budget.
    """

    def __init__(self, state, message="iteration budget exhausted"):
        super().__init__(message)
        self.state = state


class Infeasible(PpscertError):
    """The iterates diverge; the least fixpoint has an infinite component."""

    def __init__(self, message="iterates diverge; system is infeasible", scc=None):
        super().__init__(message)
        self.scc = scc


class GuessBudgetExhausted(PpscertError):
    """All guess rounds failed.

    Typically indicates a spectral radius of 1 at the least fixpoint
    (no inductive bound other than the fixpoint itself exists), or an
    infeasible system.  `rho_estimate` is the last power-iteration
    eigenvalue estimate, a diagnostic for the caller.
    """

    def __init__(self, message, rho_estimate=None, scc=None):
        super().__init__(message)
        self.rho_estimate = rho_estimate
        self.scc = scc


class ExactCheckFailed(PpscertError):
    """Rationalization plus k-induction could not validate the candidate."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class ZeroMatrix(PpscertError):
    """Eigenvector requested for an empty (0-dimensional) matrix."""


class SlackNegative(PpscertError):
    """Certificate mass sums below 1, contradicting the AST assumption."""


class ArityViolation(PpscertError):
    """A transition pushes exactly one symbol where {0, 2} is required."""


class ParseError(PpscertError):
    def __init__(self, message, line=None, col=None):
        loc = ""
        if line is not None:
            loc = f" at line {line}" + (f", col {col}" if col is not None else "")
        super().__init__(message + loc)
        self.line = line
        self.col = col


class TranslateError(PpscertError):
    pass
