"""The critical quantity s_n(Psi, f), asymptotics of the dichotomy series, and verdicts.

Approximation functions are ``psi(n) = exp(a0 + a1 n + a2 n^2) n^q``.  The
logarithm of every series term met here is, up to a bounded (in fact
vanishing) remainder, a "log-polynomial"

    c2 n^2 + c1 n + cq log n + cu log log n + c0,

so convergence reduces to sign tests on exact coefficients.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
import sympy

from . import exact
from .beta_core import BetaVector
from .dimension import DimensionFunction, compare, compare_monomial
from .errors import DomainError

n_sym = sympy.Symbol("n", positive=True)
_ell = sympy.Symbol("ell")


@dataclass(frozen=True)
class ApproxFunction:
    """``psi(n) = exp(a0 + a1 n + a2 n^2) * n^q``."""

    a0: sympy.Expr = sympy.Integer(0)
    a1: sympy.Expr = sympy.Integer(0)
    a2: sympy.Expr = sympy.Integer(0)
    q: sympy.Expr = sympy.Integer(0)
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for name in ("a0", "a1", "a2", "q"):
            object.__setattr__(self, name, exact.to_expr(getattr(self, name)))
        lead = [exact.sign(c) for c in (self.a2, self.a1, self.q, self.a0)]
        first = next((s for s in lead if s != 0), 0)
        if first > 0:
            raise DomainError(f"psi = {self} does not stay bounded by 1")
        if not self.label:
            object.__setattr__(self, "label", str(self.expr))

    @classmethod
    def parse(cls, text) -> "ApproxFunction":
        """Parse an expression in n, e.g. ``"exp(-1.2*n)"``, ``"2^-n"``, ``"n^-2"``, ``"0.01"``."""
        if isinstance(text, ApproxFunction):
            return text
        if isinstance(text, dict):
            return cls(text.get("a0", 0), text.get("a1", 0), text.get("a2", 0), text.get("q", 0))
        if isinstance(text, (int, float)):
            text = repr(text)
        expr = sympy.sympify(str(text), locals={"n": n_sym, "e": sympy.E, "phi": (1 + sympy.sqrt(5)) / 2},
                             rational=True)
        logexpr = sympy.expand(sympy.expand_log(sympy.log(expr), force=True))
        logexpr = logexpr.subs(sympy.log(n_sym), _ell)
        try:
            poly = sympy.Poly(logexpr, n_sym, _ell)
        except sympy.PolynomialError as exc:
            raise DomainError(f"{text!r} is not of the form exp(a0 + a1 n + a2 n^2) n^q") from exc
        coeffs = {m: c for m, c in zip(poly.monoms(), poly.coeffs())}
        allowed = {(0, 0), (1, 0), (2, 0), (0, 1)}
        if set(coeffs) - allowed:
            raise DomainError(f"{text!r} is not of the form exp(a0 + a1 n + a2 n^2) n^q")
        get = lambda m: sympy.nsimplify(coeffs.get(m, 0)) if isinstance(coeffs.get(m, 0), sympy.Float) \
            else coeffs.get(m, sympy.Integer(0))
        return cls(get((0, 0)), get((1, 0)), get((2, 0)), get((0, 1)), label=str(text))

    @property
    def expr(self) -> sympy.Expr:
        return sympy.exp(self.a0 + self.a1 * n_sym + self.a2 * n_sym ** 2) * n_sym ** self.q

    def __str__(self) -> str:
        return self.label or str(self.expr)

    @cached_property
    def _floats(self) -> tuple:
        return tuple(exact.to_float(c) for c in (self.a0, self.a1, self.a2, self.q))

    def log_value(self, n) -> float:
        a0, a1, a2, q = self._floats
        return a0 + a1 * n + a2 * n * n + q * math.log(n)

    def log_value_exact(self, n: int) -> sympy.Expr:
        return self.a0 + self.a1 * n + self.a2 * n * n + self.q * sympy.log(n)

    def value(self, n) -> float:
        return math.exp(self.log_value(n))

    def __call__(self, n) -> float:
        return self.value(n)

    def logpoly(self) -> "LogPoly":
        return LogPoly(self.a2, self.a1, self.q, 0, self.a0)

    @cached_property
    def n0(self) -> int:
        """Smallest n0 with psi(n) <= 1 for every n >= n0."""
        a0, a1, a2, q = self._floats
        ns = np.arange(1, 1_000_001, dtype=float)
        vals = a0 + a1 * ns + a2 * ns * ns + q * np.log(ns)
        bad = np.nonzero(vals > 1e-12)[0]
        return 1 if bad.size == 0 else int(bad[-1]) + 2

    def to_dict(self) -> dict:
        return {"a0": _num(self.a0), "a1": _num(self.a1), "a2": _num(self.a2), "q": _num(self.q),
                "label": self.label}


def _num(x):
    x = sympy.sympify(x)
    if exact.sign(x) == 0:
        return 0
    if x.is_Integer:
        return int(x)
    return exact.to_float(x)


@dataclass(frozen=True)
class LogPoly:
    """``c2 n^2 + c1 n + cq log n + cu log log n + c0`` with exact coefficients."""

    c2: sympy.Expr = sympy.Integer(0)
    c1: sympy.Expr = sympy.Integer(0)
    cq: sympy.Expr = sympy.Integer(0)
    cu: sympy.Expr = sympy.Integer(0)
    c0: sympy.Expr = sympy.Integer(0)

    def __post_init__(self):
        for name in ("c2", "c1", "cq", "cu", "c0"):
            object.__setattr__(self, name, sympy.sympify(getattr(self, name)))

    @property
    def coeffs(self) -> tuple:
        return (self.c2, self.c1, self.cq, self.cu, self.c0)

    def __add__(self, other: "LogPoly") -> "LogPoly":
        return LogPoly(*(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "LogPoly") -> "LogPoly":
        return LogPoly(*(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "LogPoly":
        return LogPoly(*(-a for a in self.coeffs))

    def scale(self, k) -> "LogPoly":
        k = sympy.sympify(k)
        return LogPoly(*(k * a for a in self.coeffs))

    def eventual_sign(self) -> int:
        for c in self.coeffs:
            s = exact.sign(c)
            if s:
                return s
        return 0

    def __call__(self, n) -> float:
        c2, c1, cq, cu, c0 = (exact.to_float(c) for c in self.coeffs)
        out = c2 * n * n + c1 * n + c0
        if cq:
            out += cq * math.log(n)
        if cu:
            out += cu * math.log(math.log(n))
        return out


def eventual_cmp(a: LogPoly, b: LogPoly) -> int:
    """Sign of ``a(n) - b(n)`` for all large n (0 only when identical)."""
    return (a - b).eventual_sign()


def linear(c1) -> LogPoly:
    return LogPoly(0, c1, 0, 0, 0)


def log_neg_log(tau: LogPoly) -> LogPoly:
    """``log(-log tau)`` up to a vanishing remainder, for ``tau -> 0``."""
    c2, c1, cq, cu, c0 = tau.coeffs
    if exact.sign(cu):
        raise DomainError("scale with a log log n term is outside the family")
    if exact.sign(c2):
        return LogPoly(0, 0, 2, 0, sympy.log(-c2))
    if exact.sign(c1):
        return LogPoly(0, 0, 1, 0, sympy.log(-c1))
    if exact.sign(cq):
        return LogPoly(0, 0, 0, 1, sympy.log(-cq))
    return LogPoly(0, 0, 0, 0, sympy.log(-c0))


def f_of(f: DimensionFunction, tau: LogPoly) -> LogPoly:
    """``log f(tau(n))`` as a log-polynomial."""
    if tau.eventual_sign() >= 0:
        raise DomainError("f evaluated at a scale that does not tend to 0")
    return tau.scale(f.s) - log_neg_log(tau).scale(f.p) + LogPoly(c0=sympy.log(f.scale))


@dataclass(frozen=True)
class AsymptoticForm:
    """``log a_n = gamma n^2 + lambda n + q log n + u log log n + c0 + o(1)``."""

    gamma: sympy.Expr
    lam: sympy.Expr
    q: sympy.Expr
    u: sympy.Expr
    c0: sympy.Expr = sympy.Integer(0)
    bounded_remainder: bool = True
    branch: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_logpoly(cls, lp: LogPoly, branch: Optional[dict] = None) -> "AsymptoticForm":
        return cls(lp.c2, lp.c1, lp.cq, lp.cu, lp.c0, True, branch or {})

    def log_term(self, n) -> float:
        return LogPoly(self.gamma, self.lam, self.q, self.u, self.c0)(n)

    def to_dict(self) -> dict:
        return {"gamma": _num(self.gamma), "lambda": _num(self.lam), "q": _num(self.q), "u": _num(self.u)}


def decide_series(form: AsymptoticForm) -> str:
    """``"Converges"`` or ``"Diverges"`` for ``sum exp(log a_n)``."""
    for coeff in (form.gamma, form.lam):
        s = exact.sign(coeff)
        if s:
            return "Converges" if s < 0 else "Diverges"
    s = exact.sign(form.q + 1)
    if s:
        return "Converges" if s < 0 else "Diverges"
    return "Converges" if exact.sign(form.u + 1) < 0 else "Diverges"


# ---------------------------------------------------------------- s_n itself

@dataclass(frozen=True)
class Candidate:
    label: str
    log_tau: float
    K1: tuple
    K2: tuple
    log_value: float

    @property
    def tau(self) -> float:
        return math.exp(self.log_tau)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


@dataclass(frozen=True)
class SnBreakdown:
    n: int
    candidates: tuple
    argmin: int

    @property
    def tau_star(self) -> float:
        return self.candidates[self.argmin].tau

    @property
    def log_sn(self) -> float:
        return self.candidates[self.argmin].log_value

    @property
    def sn(self) -> float:
        return math.exp(self.log_sn)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "candidates": [
                {"label": c.label, "tau": c.tau, "log_tau": c.log_tau, "K1": [i + 1 for i in c.K1],
                 "K2": [i + 1 for i in c.K2], "log_value": c.log_value}
                for c in self.candidates
            ],
            "tau_star": self.tau_star, "s_n": self.sn, "log_s_n": self.log_sn,
        }


def _le(a_float: float, b_float: float, a_exact: Callable, b_exact: Callable) -> bool:
    """``a <= b`` with an exact fallback when floats are too close to call."""
    gap = b_float - a_float
    if abs(gap) > 1e-9 * max(1.0, abs(a_float), abs(b_float)):
        return gap > 0
    return exact.sign(b_exact() - a_exact()) >= 0


def parse_psi_tuple(Psi, d: int) -> tuple:
    if isinstance(Psi, (str, int, float, ApproxFunction, dict)):
        Psi = [Psi]
    Psi = tuple(ApproxFunction.parse(p) for p in Psi)
    if len(Psi) != d:
        raise DomainError(f"need {d} approximation functions, got {len(Psi)}")
    return Psi


def min_level_for_domain(betas: BetaVector) -> int:
    """Smallest n with every scale of A_n inside (0, e^-1]."""
    return max(1, math.ceil(1 / min(betas.logs()) - 1e-12))


def sn_breakdown(betas, Psi, f: DimensionFunction, n: int) -> SnBreakdown:
    """Exhaustive evaluation of the 2d candidate scales of s_n(Psi, f)."""
    betas = BetaVector.parse(betas)
    d = betas.d
    Psi = parse_psi_tuple(Psi, d)
    if n < 1:
        raise DomainError("n must be positive")
    nmin = min_level_for_domain(betas)
    if n < nmin:
        raise DomainError(f"scales of A_{n} exceed e^-1; need n >= {nmin}")
    for i, psi in enumerate(Psi):
        if psi.log_value(n) > 1e-12:
            raise DomainError(f"psi_{i + 1}({n}) > 1; need n >= {psi.n0}")
    logb = betas.logs()
    side = [-n * lb for lb in logb]
    rect = [-n * lb + psi.log_value(n) for lb, psi in zip(logb, Psi)]
    side_x = [lambda i=i: -n * sympy.log(betas[i].expr) for i in range(d)]
    rect_x = [lambda i=i: -n * sympy.log(betas[i].expr) + Psi[i].log_value_exact(n) for i in range(d)]
    scales = [(f"beta_{i + 1}^-n", side[i], side_x[i]) for i in range(d)]
    scales += [(f"beta_{i + 1}^-n psi_{i + 1}", rect[i], rect_x[i]) for i in range(d)]
    cands = []
    for label, lt, lt_x in scales:
        K1 = tuple(i for i in range(d) if _le(side[i], lt, side_x[i], lt_x))
        K2 = tuple(i for i in range(d) if _le(lt, rect[i], lt_x, rect_x[i]))
        val = float(f.log_eval(lt))
        val += sum(side[i] - lt for i in K1) + sum(rect[i] - lt for i in K2)
        cands.append(Candidate(label, lt, K1, K2, val))
    argmin = min(range(len(cands)), key=lambda j: (cands[j].log_value, j))
    return SnBreakdown(n, tuple(cands), argmin)


def series_term_log(betas, Psi, f, n: int) -> float:
    """``log(s_n * prod beta_i^n)``."""
    betas = BetaVector.parse(betas)
    return sn_breakdown(betas, Psi, f, n).log_sn + n * sum(betas.logs())


# ------------------------------------------------------------- asymptotics

def _rectangle_form(betas: BetaVector, Psi: tuple, f: DimensionFunction) -> AsymptoticForm:
    d = betas.d
    logb = [sympy.log(b.expr) for b in betas]
    side = [linear(-lb) for lb in logb]
    rect = [linear(-lb) + psi.logpoly() for lb, psi in zip(logb, Psi)]
    scales = [(f"beta_{i + 1}^-n", side[i]) for i in range(d)] + \
             [(f"beta_{i + 1}^-n psi_{i + 1}", rect[i]) for i in range(d)]
    best = None
    for idx, (label, tau) in enumerate(scales):
        K1 = tuple(i for i in range(d) if eventual_cmp(side[i], tau) <= 0)
        K2 = tuple(i for i in range(d) if eventual_cmp(tau, rect[i]) <= 0)
        val = f_of(f, tau)
        for i in K1:
            val = val + side[i] - tau
        for i in K2:
            val = val + rect[i] - tau
        if best is None or eventual_cmp(val, best[0]) < 0:
            best = (val, {"tau": label, "K1": [i + 1 for i in K1], "K2": [i + 1 for i in K2]})
    val = best[0] + linear(sum(logb))
    return AsymptoticForm.from_logpoly(val, best[1])


def _multiplicative_form(betas: BetaVector, psi: ApproxFunction, f: DimensionFunction, d: int) -> AsymptoticForm:
    lb = sympy.log(betas[-1].expr)
    tau = linear(-lb) + psi.logpoly()
    if d == 1:
        val = linear(lb) + f_of(f, tau)
    else:
        val = linear(d * lb) - psi.logpoly().scale(d - 1) + f_of(f, tau)
    return AsymptoticForm.from_logpoly(val, {"tau": "beta_d^-n psi"})


def _w2star_forms(t: sympy.Expr, f: DimensionFunction) -> dict:
    l2, l3 = sympy.log(2), sympy.log(3)
    tau1 = linear(-(l2 + t))
    first = f_of(f, tau1) + linear(sympy.log(6))
    tau2 = LogPoly(-1, -l3, 0, 0, 0)
    second = f_of(f, tau2) + LogPoly(1, 2 * l3 - t, 0, 0, 0)
    return {"w2star_1": AsymptoticForm.from_logpoly(first, {"tau": "2^-n e^-nt"}),
            "w2star_2": AsymptoticForm.from_logpoly(second, {"tau": "3^-n e^-n^2"})}


def series_asymptotics(betas=None, Psi=None, f: DimensionFunction = None, target: str = "rectangle",
                       t=None, d: Optional[int] = None) -> AsymptoticForm:
    """Asymptotic form of the series term for ``target`` in
    {rectangle, multiplicative, multiplicative_d1, w2star_1, w2star_2}."""
    if target in ("w2star_1", "w2star_2"):
        return _w2star_forms(exact.to_expr(t), f)[target]
    betas = BetaVector.parse(betas)
    if target == "rectangle":
        return _rectangle_form(betas, parse_psi_tuple(Psi, betas.d), f)
    if target in ("multiplicative", "multiplicative_d1"):
        psi = ApproxFunction.parse(Psi[0] if isinstance(Psi, (list, tuple)) else Psi)
        dd = 1 if target == "multiplicative_d1" else (d or betas.d)
        return _multiplicative_form(betas, psi, f, dd)
    raise DomainError(f"unknown series target {target!r}")


# ---------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "note": self.note}


@dataclass
class DichotomyVerdict:
    tag: str
    hypothesis_checks: list
    series: Optional[AsymptoticForm]
    series_verdict: Optional[str]
    conclusion: str
    reason: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def hypotheses_hold(self) -> bool:
        return self.conclusion != "HypothesisFailed"

    def to_dict(self) -> dict:
        out = {
            "tag": self.tag,
            "hypothesis_checks": [c.to_dict() for c in self.hypothesis_checks],
            "series": self.series.to_dict() if self.series is not None else None,
            "verdict": self.series_verdict,
            "conclusion": self.conclusion,
        }
        if self.reason:
            out["reason"] = self.reason
        if self.metadata:
            out["metadata"] = self.metadata
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, default=str)


def _full_measure_note(f: DimensionFunction, d: int) -> str:
    rel = compare_monomial(f, d)
    return "infinite" if rel.f_strict_g else "finite positive"


def _psi_check(Psi: Sequence[ApproxFunction]) -> HypothesisCheck:
    n0 = max(p.n0 for p in Psi)
    return HypothesisCheck("psi_at_most_one", True, f"psi_i(n) <= 1 for n >= {n0}; series start at n0 = {n0}")


def block_permutation(betas: BetaVector, Psi: Sequence[ApproxFunction]) -> list:
    """Within each block of equal betas, indices ordered by eventually nonincreasing psi."""
    import functools

    perm = []
    i = 0
    d = betas.d
    while i < d:
        j = i
        while j + 1 < d and exact.sign(betas[j + 1].expr - betas[i].expr) == 0:
            j += 1
        block = list(range(i, j + 1))
        block.sort(key=functools.cmp_to_key(lambda a, b: -eventual_cmp(Psi[a].logpoly(), Psi[b].logpoly()) or a - b))
        perm.extend(block)
        i = j + 1
    return perm


def rectangle_verdict(betas, Psi, f: DimensionFunction) -> DichotomyVerdict:
    betas = BetaVector.parse(betas)
    d = betas.d
    Psi = parse_psi_tuple(Psi, d)
    checks = [_psi_check(Psi)]
    rel_d = compare_monomial(f, d)
    checks.append(HypothesisCheck("f_precsim_d", rel_d.f_precsim_g, f"f vs r^{d}: {rel_d.relation}"))
    comparable = True
    for k in range(1, d):
        rel = compare_monomial(f, k)
        checks.append(HypothesisCheck(f"comparable_with_{k}", rel.comparable, f"f vs r^{k}: {rel.relation}"))
        comparable &= rel.comparable
    integer = betas.all_integer
    checks.append(HypothesisCheck("integer_betas", integer, "required on the divergence side only"))
    form = _rectangle_form(betas, Psi, f)
    sv = decide_series(form)
    perm = block_permutation(betas, Psi)
    meta = {"n0": max(p.n0 for p in Psi), "block_permutation": [i + 1 for i in perm],
            "eventual_branch": form.branch}
    if not rel_d.f_precsim_g:
        return DichotomyVerdict("rectangle", checks, form, sv, "HypothesisFailed", "f ⪯ d fails", meta)
    if not comparable:
        return DichotomyVerdict("rectangle", checks, form, sv, "HypothesisFailed",
                                "f incomparable with some k < d", meta)
    if sv == "Converges":
        return DichotomyVerdict("rectangle", checks, form, sv, "MeasureZero", "", meta)
    if not integer:
        return DichotomyVerdict("rectangle", checks, form, sv, "HypothesisFailed",
                                "non-integer β on divergence side", meta)
    meta["full_measure"] = _full_measure_note(f, d)
    return DichotomyVerdict("rectangle", checks, form, sv, "FullMeasure", "", meta)


def multiplicative_verdict(betas, psi, fg: DimensionFunction, d: Optional[int] = None) -> DichotomyVerdict:
    betas = BetaVector.parse(betas)
    d = d or betas.d
    if d < 1:
        raise DomainError("d must be at least 1")
    psi = ApproxFunction.parse(psi)
    checks = [_psi_check([psi])]
    meta = {"n0": psi.n0, "beta_d": str(betas[-1].expr), "d": d}
    if d == 1:
        rel = compare_monomial(fg, 1)
        checks.append(HypothesisCheck("g_precsim_1", rel.f_precsim_g, f"g vs r: {rel.relation}"))
        form = _multiplicative_form(betas, psi, fg, 1)
        sv = decide_series(form)
        tag = "multiplicative_d1"
        if not rel.f_precsim_g:
            return DichotomyVerdict(tag, checks, form, sv, "HypothesisFailed", "g ⪯ 1 fails", meta)
    else:
        lower = compare_monomial(fg, d - 1)
        checks.append(HypothesisCheck(f"{d - 1}_strictly_below_f", lower.g_strict_f,
                                      f"r^{d - 1} vs f: {lower.relation}"))
        s_f, p_f = fg.s, fg.p
        upper = exact.sign(s_f - d) < 0 and exact.sign(s_f + p_f - d) < 0
        note = "some s in (d-1, d) with f ⪯ r^s exists iff s_f < d and s_f + p_f < d"
        checks.append(HypothesisCheck("f_precsim_s_below_d", upper, note))
        form = _multiplicative_form(betas, psi, fg, d)
        sv = decide_series(form)
        tag = "multiplicative"
        if not upper:
            return DichotomyVerdict(tag, checks, form, sv, "HypothesisFailed", "f ⪯ s < d fails", meta)
        if not lower.g_strict_f:
            return DichotomyVerdict(tag, checks, form, sv, "HypothesisFailed", f"{d - 1} ≺ f fails", meta)
    if sv == "Converges":
        return DichotomyVerdict(tag, checks, form, sv, "MeasureZero", "", meta)
    meta["full_measure"] = _full_measure_note(fg, d)
    return DichotomyVerdict(tag, checks, form, sv, "FullMeasure", "", meta)


def w2star_verdict(t, f: DimensionFunction) -> DichotomyVerdict:
    """Verdict for the two-dimensional example with targets ``e^-nt`` (base 2) and ``e^-n^2`` (base 3)."""
    t = exact.to_expr(t)
    if exact.sign(t) <= 0:
        raise DomainError("t must be positive")
    rel1 = compare_monomial(f, 1)
    rel2 = compare_monomial(f, 2)
    checks = [
        HypothesisCheck("f_precsim_2", rel2.f_precsim_g, f"f vs r^2: {rel2.relation}"),
        HypothesisCheck("comparable_with_1", rel1.comparable, f"f vs r: {rel1.relation}"),
    ]
    forms = _w2star_forms(t, f)
    big_t = exact.cmp(t, sympy.log(3)) > 0
    meta = {"t_above_log3": big_t}
    tag = "w2star"
    if not rel2.f_precsim_g:
        return DichotomyVerdict(tag, checks, None, None, "HypothesisFailed", "f ⪯ 2 fails", meta)
    if not rel1.comparable:
        return DichotomyVerdict(tag, checks, None, None, "HypothesisFailed", "f incomparable with 1", meta)
    one_le_f = rel1.g_precsim_f
    if big_t:
        if one_le_f:
            meta["branch"] = "t > log3, 1 ⪯ f"
            return DichotomyVerdict(tag, checks, None, None, "MeasureZero", "", meta)
        meta["branch"] = "t > log3, f ≺ 1"
        form = forms["w2star_1"]
    else:
        if rel1.f_strict_g:
            meta["branch"] = "t <= log3, f ≺ 1"
            meta["full_measure"] = "infinite"
            return DichotomyVerdict(tag, checks, None, None, "FullMeasure", "", meta)
        cap = compare(f, DimensionFunction(1 + sympy.log(2) / sympy.log(3)))
        checks.append(HypothesisCheck("f_precsim_1_plus_log2_over_log3", cap.f_precsim_g,
                                      f"f vs r^(1+log2/log3): {cap.relation}"))
        if not cap.f_precsim_g:
            return DichotomyVerdict(tag, checks, None, None, "HypothesisFailed",
                                    "f ⪯ 1 + log2/log3 fails", meta)
        meta["branch"] = "t <= log3, 1 ⪯ f ⪯ 1 + log2/log3"
        form = forms["w2star_2"]
    sv = decide_series(form)
    if sv == "Converges":
        return DichotomyVerdict(tag, checks, form, sv, "MeasureZero", "", meta)
    meta["full_measure"] = _full_measure_note(f, 2)
    return DichotomyVerdict(tag, checks, form, sv, "FullMeasure", "", meta)


def w2star_rectangle_inputs(t) -> tuple:
    """Bases and targets of the two-dimensional example as a rectangle problem."""
    t = exact.to_expr(t)
    return BetaVector.parse([2, 3]), (ApproxFunction(0, -t, 0, 0), ApproxFunction(0, 0, -1, 0))


# ------------------------------------------------------------ numeric mode

@dataclass
class NumericSeriesReport:
    verdict: str
    n0: int
    n_max: int
    checkpoints: list
    last_log_term: float
    log_term_slope: float

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "n0": self.n0, "n_max": self.n_max,
                "checkpoints": self.checkpoints, "last_log_term": self.last_log_term,
                "log_term_slope": self.log_term_slope}


def numeric_series_report(log_term: Callable[[int], float], n0: int = 1, n_max: int = 10_000) -> NumericSeriesReport:
    """Partial sums of ``sum exp(log_term(n))`` for an arbitrary callable.

    No finite computation decides convergence, so the verdict is always
    ``Undetermined``; the checkpoints and the late slope of the log-terms
    are tail diagnostics.
    """
    logs = np.array([log_term(n) for n in range(n0, n_max + 1)], dtype=float)
    cums = np.logaddexp.accumulate(logs)
    checkpoints = []
    k = 1
    while k <= len(logs):
        checkpoints.append({"n": n0 + k - 1, "log_partial_sum": float(cums[k - 1])})
        k *= 10
    tail = logs[len(logs) // 2:]
    ns = np.arange(len(logs))[len(logs) // 2:] + n0
    slope = float(np.polyfit(ns, tail, 1)[0]) if tail.size > 1 else 0.0
    return NumericSeriesReport("Undetermined", n0, n_max, checkpoints, float(logs[-1]), slope)


def verdict_grid_csv(rows: Sequence[tuple]) -> str:
    """CSV for a sweep: each row is ``(params: dict, verdict: DichotomyVerdict)``."""
    buf = io.StringIO()
    keys = sorted({k for params, _ in rows for k in params})
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(keys + ["tag", "gamma", "lambda", "q", "u", "verdict", "conclusion", "reason"])
    for params, v in rows:
        ser = v.series.to_dict() if v.series is not None else {"gamma": "", "lambda": "", "q": "", "u": ""}
        writer.writerow([params.get(k, "") for k in keys] +
                        [v.tag, ser["gamma"], ser["lambda"], ser["q"], ser["u"],
                         v.series_verdict or "", v.conclusion, v.reason])
    return buf.getvalue()
