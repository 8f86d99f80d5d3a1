"""Text format for explicit positive polynomial systems (.pps files).

One declaration per line, `var = term + term + ...`, where a term is an
optional coefficient followed by variable factors with optional `^exp`.
Coefficients are decimals (`0.5`), integers, or ratios (`1/3`, also
`1//3`).  `#` starts a comment; an empty right-hand side is the zero
polynomial.  Parsing is exact: decimal coefficients become rationals
without rounding.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ParseError
from ..pps import Monomial, PolySystem

_VAR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*$")
_NUM_RE = re.compile(r"[0-9]")


def parse_pps(text: str) -> PolySystem:
    decls: list[tuple[str, str, int]] = []
    seen = set()
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'var = polynomial'", ln)
        name, _, rhs = line.partition("=")
        name = name.strip()
        if not _VAR_RE.match(name):
            raise ParseError(f"bad variable name {name!r}", ln)
        if name in seen:
            raise ParseError(f"duplicate variable {name!r}", ln)
        seen.add(name)
        decls.append((name, rhs.strip(), ln))
    if not decls:
        raise ParseError("no variable declarations found")
    index = {name: i for i, (name, _, _) in enumerate(decls)}
    equations = []
    for name, rhs, ln in decls:
        poly = []
        if rhs:
            for chunk in rhs.split("+"):
                poly.append(_parse_term(chunk.strip(), index, ln))
        equations.append(poly)
    return PolySystem([name for name, _, _ in decls], equations)


def _parse_term(chunk: str, index: dict, ln: int) -> Monomial:
    if not chunk:
        raise ParseError("empty term (stray '+')", ln)
    tokens = chunk.split()
    coeff = Fraction(1)
    start = 0
    if _NUM_RE.match(tokens[0][0]) or tokens[0][0] == ".":
        coeff = _parse_coeff(tokens[0], ln)
        start = 1
    elif len(tokens) == 0:
        raise ParseError("empty term", ln)
    powers: dict[int, int] = {}
    for token in tokens[start:]:
        varname, _, exp_text = token.partition("^")
        if not _VAR_RE.match(varname):
            raise ParseError(f"bad factor {token!r}", ln)
        if varname not in index:
            raise ParseError(f"undefined variable {varname!r}", ln)
        if exp_text:
            try:
                exp = int(exp_text)
            except ValueError:
                raise ParseError(f"bad exponent in {token!r}", ln) from None
            if exp < 1:
                raise ParseError(f"exponent must be positive in {token!r}", ln)
        else:
            exp = 1
        var = index[varname]
        powers[var] = powers.get(var, 0) + exp
    if start == 1 and not powers and coeff == 0:
        return Monomial.make(0)
    return Monomial.make(coeff, powers)


def _parse_coeff(token: str, ln: int) -> Fraction:
    try:
        if "//" in token:
            num, den = token.split("//")
            value = Fraction(int(num), int(den))
        elif "/" in token:
            num, den = token.split("/")
            value = Fraction(int(num), int(den))
        else:
            value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"malformed coefficient {token!r}", ln) from None
    if value < 0:
        raise ParseError("coefficients must be non-negative", ln)
    return value


def serialize_pps(sys: PolySystem) -> str:
    """Canonical text; parse_pps(serialize_pps(s)) == s."""
    return sys.canonical_text()
