"""Exact-ish real arithmetic on symbolic coefficients.

Coefficients of the parametric families (logs of integers, rationals,
user supplied closed forms such as ``log(6)/(log(2)+2)``) are kept as
sympy expressions so that boundary cases of the series classifier are
decided without floating point noise.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import mpmath
import sympy

_NAMED = {
    "phi": (1 + sympy.sqrt(5)) / 2,
    "golden": (1 + sympy.sqrt(5)) / 2,
    "pi": sympy.pi,
    "e": sympy.E,
}

# below this magnitude a numerically evaluated coefficient is treated as zero
ZERO_THRESHOLD = mpmath.mpf(10) ** -60


def to_expr(value) -> sympy.Expr:
    """Convert numbers, strings and fractions to a sympy expression.

    Decimal literals become exact rationals, so ``"0.9"`` is ``9/10``.
    """
    if isinstance(value, sympy.Basic):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, int):
        return sympy.Integer(value)
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        return sympy.nsimplify(value, rational=True) if value == int(value) else sympy.Rational(repr(value))
    if isinstance(value, mpmath.mpf):
        return sympy.Float(mpmath.nstr(value, 50), 50)
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in _NAMED:
            return _NAMED[text.lower()]
        return sympy.sympify(text, locals={"phi": _NAMED["phi"], "e": sympy.E}, rational=True)
    raise TypeError(f"cannot convert {value!r} to an expression")


@lru_cache(maxsize=65536)
def _numeric(expr: sympy.Expr) -> mpmath.mpf:
    with mpmath.workdps(80):
        return mpmath.mpf(sympy.N(expr, 80))


def sign(expr) -> int:
    """Sign of a real constant expression, with exact zero detection."""
    expr = sympy.sympify(expr)
    if expr.is_zero:
        return 0
    if expr.is_Number:
        return int(sympy.sign(expr))
    val = _numeric(expr)
    if abs(val) > ZERO_THRESHOLD:
        return 1 if val > 0 else -1
    if sympy.simplify(expr) == 0:
        return 0
    # numerically indistinguishable from zero; the families here never
    # produce genuinely nonzero values this small
    return 0


def cmp(a, b) -> int:
    return sign(sympy.sympify(a) - sympy.sympify(b))


def to_float(expr) -> float:
    return float(sympy.N(expr, 30))
