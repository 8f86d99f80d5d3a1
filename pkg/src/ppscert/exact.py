"""Exact-rational certificate machinery.

Float candidates from the solver are rounded *up* to rationals with a
bounded denominator, checked for inductivity f(u) <= u in exact
arithmetic, and rescued by k-induction when plain inductivity fails by a
rounding margin.  The file verifier re-runs the same exact check from
scratch and shares no code with the solver beyond polynomial evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ExactCheckFailed, ParseError
from .pps import PolySystem, evaluate

CERT_HEADER = "ppscert v1"
HEADROOM_RETRY = Fraction(1, 2 ** 20)


@dataclass(frozen=True)
class RoundingGrain:
    """Policy for the float -> rational conversion."""

    denominator_bound: int = 2 ** 32
    headroom: Fraction = Fraction(0)

    def __post_init__(self):
        if self.denominator_bound < 2:
            raise ValueError("denominator_bound must be >= 2")
        object.__setattr__(self, "headroom", Fraction(self.headroom))
        if self.headroom < 0:
            raise ValueError("headroom must be non-negative")


def ceil_rational(target: Fraction, max_den: int) -> Fraction:
    """Smallest rational >= target with denominator <= max_den.

    Walks the continued fraction of the target; the two candidates that
    bracket it are the last convergent inside the bound and the best
    semiconvergent, and the smaller of those lying at or above the target
    is the answer.
    """
    if target.denominator <= max_den:
        return target
    p0, q0, p1, q1 = 0, 1, 1, 0
    n, d = target.numerator, target.denominator
    while True:
        a = n // d
        q2 = q0 + a * q1
        if q2 > max_den:
            break
        p0, q0, p1, q1 = p1, q1, p0 + a * p1, q2
        n, d = d, n - a * d
    k = (max_den - q0) // q1
    candidates = [Fraction(p0 + k * p1, q0 + k * q1), Fraction(p1, q1)]
    upper = [c for c in candidates if c >= target]
    return min(upper)


def to_rational(u, grain: RoundingGrain = RoundingGrain()) -> tuple[Fraction, ...]:
    """Round a float vector upward to bounded-denominator rationals.

    Rounding down could land below the least fixpoint and can never be
    validated, so each entry maps to the smallest admissible rational at
    or above entry + headroom; binary64 entries are converted exactly
    first (they are dyadic rationals).
    """
    out = []
    for x in u:
        x = float(x)
        if not np.isfinite(x) or x < 0:
            raise ValueError("entries must be finite and non-negative")
        out.append(ceil_rational(Fraction(x) + grain.headroom, grain.denominator_bound))
    return tuple(out)


def check_inductive(sys: PolySystem, u) -> bool:
    """Exact check of f(u) <= u componentwise."""
    u = tuple(u)
    return all(fi <= ui for fi, ui in zip(evaluate(sys, u), u))


def k_induction_check(sys: PolySystem, u, k_max: int) -> tuple[bool, int | None]:
    """Iterated inductivity check up to depth k_max.

    Depth 1 is the plain check f(u) <= u; depth j+1 tests
    f(u min f(...)) <= u on the refined vector.  Success at any depth
    proves lfp <= u.  The refinement is monotonically decreasing, so a
    stalled refinement vector ends the search early.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    u = tuple(u)
    v = u
    for depth in range(1, k_max + 1):
        fv = evaluate(sys, v)
        if all(a <= b for a, b in zip(fv, u)):
            return True, depth
        refined = tuple(min(a, b) for a, b in zip(u, fv))
        if refined == v:
            return False, None
        v = refined
    return False, None


def first_violation(sys: PolySystem, u) -> int | None:
    """Index of the first coordinate with f(u) > u, None if inductive."""
    for i, (fi, ui) in enumerate(zip(evaluate(sys, tuple(u)), u)):
        if fi > ui:
            return i
    return None


# ---------------------------------------------------------------------------
# certificates


@dataclass
class Certificate:
    """Rational inductive upper bound plus the metadata needed to audit it."""

    system_fingerprint: str
    var_names: tuple[str, ...]
    upper: tuple[Fraction, ...]
    epsilon: Fraction
    k_used: int
    lower_witness: np.ndarray | None = None
    per_var_provenance: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, Certificate):
            return NotImplemented
        return (
            self.system_fingerprint == other.system_fingerprint
            and self.var_names == other.var_names
            and self.upper == other.upper
            and self.epsilon == other.epsilon
            and self.k_used == other.k_used
        )

    def to_text(self) -> str:
        lines = [
            CERT_HEADER,
            f"system-sha256 {self.system_fingerprint}",
            f"epsilon {self.epsilon.numerator}/{self.epsilon.denominator}",
            f"k {self.k_used}",
        ]
        for name, value in zip(self.var_names, self.upper):
            lines.append(f"{name} {value.numerator}/{value.denominator}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    @staticmethod
    def from_text(text: str) -> "Certificate":
        lines = text.splitlines()
        if len(lines) < 4 or lines[0].strip() != CERT_HEADER:
            raise ParseError("not a certificate file (missing header)")
        fingerprint = _field_line(lines[1], "system-sha256", 2)
        epsilon = _parse_fraction(_field_line(lines[2], "epsilon", 3), 3)
        k_text = _field_line(lines[3], "k", 4)
        try:
            k_used = int(k_text)
        except ValueError:
            raise ParseError("malformed k value", 4) from None
        if k_used < 1:
            raise ParseError("k must be >= 1", 4)
        names, values = [], []
        for ln, line in enumerate(lines[4:], start=5):
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ParseError("expected '<var> <num>/<den>'", ln)
            names.append(parts[0])
            values.append(_parse_fraction(parts[1], ln))
        return Certificate(fingerprint, tuple(names), tuple(values), epsilon, k_used)

    @staticmethod
    def load(path) -> "Certificate":
        with open(path, "r", encoding="utf-8") as fh:
            return Certificate.from_text(fh.read())


def _field_line(line: str, key: str, ln: int) -> str:
    parts = line.split(" ")
    if len(parts) != 2 or parts[0] != key:
        raise ParseError(f"expected '{key} <value>'", ln)
    return parts[1]


def _parse_fraction(text: str, ln: int) -> Fraction:
    num, sep, den = text.partition("/")
    if not sep:
        raise ParseError("malformed rational (expected num/den)", ln)
    try:
        value = Fraction(int(num), int(den))
    except (ValueError, ZeroDivisionError):
        raise ParseError("malformed rational", ln) from None
    if value < 0:
        raise ParseError("negative certificate entry", ln)
    return value


def rationalize_and_verify(
    sys: PolySystem,
    u: np.ndarray,
    grain: RoundingGrain = RoundingGrain(),
    k_max: int = 10,
    epsilon: Fraction = Fraction(0),
    lower_witness: np.ndarray | None = None,
    per_var_provenance: dict | None = None,
) -> Certificate:
    """Convert a float candidate to a verified rational certificate.

    If the rationalized vector fails k-induction, one retry adds 2^-20 of
    headroom to every entry before rounding; candidates strictly below the
    fixpoint in some coordinate still fail and raise ExactCheckFailed.
    """
    u_q = to_rational(u, grain)
    ok, k_used = k_induction_check(sys, u_q, k_max)
    if not ok:
        bumped = RoundingGrain(grain.denominator_bound, grain.headroom + HEADROOM_RETRY)
        u_q = to_rational(u, bumped)
        ok, k_used = k_induction_check(sys, u_q, k_max)
    if not ok:
        bad = first_violation(sys, u_q)
        name = sys.var_names[bad] if bad is not None else None
        raise ExactCheckFailed(
            "exact verification failed" + (f" near coordinate {name}" if name else ""),
            coordinate=name,
        )
    return Certificate(
        system_fingerprint=sys.fingerprint(),
        var_names=sys.var_names,
        upper=u_q,
        epsilon=epsilon,
        k_used=k_used,
        lower_witness=lower_witness,
        per_var_provenance=dict(per_var_provenance or {}),
    )


# ---------------------------------------------------------------------------
# the trusted verifier


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str | None = None
    coordinate: str | None = None

    def __bool__(self):
        return self.ok


def verify_certificate_file(sys: PolySystem, cert: Certificate) -> Verdict:
    """Re-check a certificate from scratch against a system.

    Recomputes the fingerprint, then re-runs the k-fold inductivity check
    at the recorded depth in fresh exact arithmetic.  No cleaning and no
    SCC decomposition: one certificate-sized evaluation per depth.
    """
    if cert.system_fingerprint != sys.fingerprint():
        return Verdict(False, "fingerprint mismatch")
    if cert.var_names != sys.var_names:
        return Verdict(False, "variable names do not match the system")
    if len(cert.upper) != sys.n:
        return Verdict(False, "wrong number of entries")
    for name, value in zip(cert.var_names, cert.upper):
        if value < 0:
            return Verdict(False, "negative entry", coordinate=name)
    ok, _ = k_induction_check(sys, cert.upper, cert.k_used)
    if not ok:
        bad = first_violation(sys, cert.upper)
        name = sys.var_names[bad] if bad is not None else "<k-fold>"
        return Verdict(False, f"inductivity failure at coordinate {name}", coordinate=name)
    return Verdict(True)
