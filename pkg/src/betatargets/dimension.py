"""Power-log dimension functions ``f(r) = c r^s (-log r)^(-p)`` and their order.

``f ⪯ g`` means ``f(y)/g(y) <= f(x)/g(x)`` for all ``0 < x < y <= e^-1``,
i.e. the ratio is nonincreasing.  For the power-log family the ratio is
``r^ds L^(-dp)`` with ``L = -log r >= 1``; its logarithmic derivative in
``log r`` is ``ds + dp / L``, which decides the order exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import sympy

from . import exact
from .errors import DomainError

R_MAX = math.exp(-1)

RELATIONS = ("precsim", "strict", "equivalent", "reverse", "reverse_strict", "incomparable")


@dataclass(frozen=True)
class DimensionFunction:
    s: sympy.Expr
    p: sympy.Expr = sympy.Integer(0)
    scale: sympy.Expr = sympy.Integer(1)

    def __post_init__(self):
        for name in ("s", "p", "scale"):
            object.__setattr__(self, name, exact.to_expr(getattr(self, name)))
        if exact.sign(self.scale) <= 0:
            raise DomainError("scale must be positive")
        s_sign = exact.sign(self.s)
        ok = (s_sign > 0 and exact.sign(self.s + self.p) >= 0) or (s_sign == 0 and exact.sign(self.p) > 0)
        if not ok:
            raise DomainError("dimension function must be nondecreasing with f(0+) = 0")

    @classmethod
    def monomial(cls, k) -> "DimensionFunction":
        return cls(exact.to_expr(k), 0, 1)

    @classmethod
    def parse(cls, text: str) -> "DimensionFunction":
        """Parse ``"r^S"``, ``"r^S*log^-P"`` or ``"C*r^S*log^-P"``.

        ``log^Q`` stands for ``(-log r)^Q``; exponents may be expressions
        in parentheses, e.g. ``r^(log(6)/(log(2)+2))``.
        """
        s, p, scale = sympy.Integer(0), sympy.Integer(0), sympy.Integer(1)
        seen_r = False
        for factor in _split_factors(text.replace(" ", "").replace("**", "^")):
            base, _, expo = factor.partition("^")
            value = exact.to_expr(expo) if expo else sympy.Integer(1)
            if base == "r":
                s += value
                seen_r = True
            elif base in ("log", "(-log(r))", "L"):
                p -= value
            elif not expo:
                scale *= exact.to_expr(factor)
            else:
                raise DomainError(f"cannot parse factor {factor!r} of {text!r}")
        if not seen_r and p == 0:
            raise DomainError(f"cannot parse dimension function {text!r}")
        return cls(s, p, scale)

    @classmethod
    def from_dict(cls, data: dict) -> "DimensionFunction":
        return cls(data["s"], data.get("p", 0), data.get("scale", 1))

    def to_dict(self) -> dict:
        return {"s": _num(self.s), "p": _num(self.p), "scale": _num(self.scale)}

    def __str__(self) -> str:
        out = f"r^{_atom(self.s)}"
        if not self.p.is_zero:
            out += f"*log^{_atom(-self.p)}"
        if self.scale != 1:
            out = f"{_atom(self.scale)}*{out}"
        return out

    @property
    def s_float(self) -> float:
        return exact.to_float(self.s)

    @property
    def p_float(self) -> float:
        return exact.to_float(self.p)

    def with_scale(self, scale) -> "DimensionFunction":
        return DimensionFunction(self.s, self.p, scale)

    def log_eval(self, log_r):
        """``log f(r)`` given ``log r`` (float or mpf)."""
        if log_r > -1 + 1e-15:
            raise DomainError(f"r = exp({float(log_r):.6g}) outside (0, e^-1]")
        return (mpmath.log(exact.to_float(self.scale)) if self.scale != 1 else 0) + \
            exact.to_float(self.s) * log_r - exact.to_float(self.p) * mpmath.log(-log_r)

    def __call__(self, r):
        return eval_f(self, r)


def _split_factors(text: str) -> list[str]:
    """Split on top-level ``*``."""
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "*" and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    if depth != 0 or any(not part for part in parts):
        raise DomainError(f"cannot parse dimension function {text!r}")
    return parts


def _atom(x) -> str:
    text = str(x)
    return text if text.lstrip("-").replace(".", "").isdigit() else f"({text})"


def _num(x):
    if x.is_Integer:
        return int(x)
    if x.is_Rational:
        return float(x)
    return exact.to_float(x)


def eval_f(f: DimensionFunction, r) -> float:
    """``scale * r^s * (-log r)^(-p)`` on ``(0, e^-1]``."""
    if not 0 < r <= R_MAX * (1 + 1e-15):
        raise DomainError(f"r = {r} outside (0, e^-1]")
    lr = mpmath.log(r)
    return float(mpmath.exp(f.log_eval(lr)))


@dataclass(frozen=True)
class OrderVerdict:
    relation: str
    witness: Optional[dict] = None

    @property
    def f_precsim_g(self) -> bool:
        return self.relation in ("precsim", "strict", "equivalent")

    @property
    def g_precsim_f(self) -> bool:
        return self.relation in ("reverse", "reverse_strict", "equivalent")

    @property
    def f_strict_g(self) -> bool:
        return self.relation == "strict"

    @property
    def g_strict_f(self) -> bool:
        return self.relation == "reverse_strict"

    @property
    def comparable(self) -> bool:
        return self.relation != "incomparable"


def _precsim(ds, dp) -> tuple[bool, bool]:
    """(f ⪯ g, f ≺ g) for exponent differences ``ds = s_f - s_g``, ``dp = p_f - p_g``."""
    sds, sdp = exact.sign(ds), exact.sign(dp)
    le = (sds < 0 and exact.sign(ds + dp) <= 0) or (sds == 0 and sdp <= 0)
    return le, le and (sds < 0 or sdp < 0)


def compare(f: DimensionFunction, g: DimensionFunction) -> OrderVerdict:
    """Relation of f to g in the order ⪯ (scales never matter)."""
    ds, dp = f.s - g.s, f.p - g.p
    le, lt = _precsim(ds, dp)
    ge, gt = _precsim(-ds, -dp)
    if le and ge:
        return OrderVerdict("equivalent")
    if le:
        return OrderVerdict("strict" if lt else "precsim")
    if ge:
        return OrderVerdict("reverse_strict" if gt else "reverse")
    return OrderVerdict("incomparable", _witness(exact.to_float(ds), exact.to_float(dp)))


def _witness(ds: float, dp: float) -> dict:
    """Pairs x < y violating f ⪯ g and g ⪯ f respectively.

    Incomparability means ``ds`` and ``ds + dp`` have opposite signs, so
    the log-ratio turns at ``L* = -dp/ds`` in ``L = -log r``.
    """
    Lstar = -dp / ds
    near = (1.0, 0.5 * (1.0 + Lstar))
    far = (Lstar, 2 * Lstar + 1)
    lo_pair = (math.exp(-near[1]), math.exp(-near[0]))
    hi_pair = (math.exp(-far[1]), math.exp(-far[0]))
    # the ratio increases with r on L < L* iff ds + dp/L > 0 there
    inc_near = ds + dp > 0
    against_le = lo_pair if inc_near else hi_pair
    against_ge = hi_pair if inc_near else lo_pair
    return {"violates_f_precsim_g": against_le, "violates_g_precsim_f": against_ge}


def compare_monomial(f: DimensionFunction, k) -> OrderVerdict:
    return compare(f, DimensionFunction.monomial(k))


def ratio_nonincreasing_on_grid(f: DimensionFunction, g: DimensionFunction, x: float, y: float) -> bool:
    """Check ``f(y)/g(y) <= f(x)/g(x)`` for ``x < y`` in log space."""
    lf = lambda r: float(f.log_eval(math.log(r)) - g.log_eval(math.log(r)))
    return lf(y) <= lf(x) + 1e-12
