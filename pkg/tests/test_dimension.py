import math

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from betatargets.dimension import DimensionFunction, compare, compare_monomial, eval_f, ratio_nonincreasing_on_grid
from betatargets.errors import DomainError

F = DimensionFunction.parse


def test_eval_examples():
    assert eval_f(DimensionFunction(2), 0.25) == pytest.approx(0.0625, rel=1e-15)
    assert eval_f(DimensionFunction(1, -1), math.exp(-2)) == pytest.approx(2 * math.exp(-2), rel=1e-14)
    assert eval_f(DimensionFunction(1, sympy.Rational(1, 2)), math.exp(-4)) == pytest.approx(0.0091578, rel=1e-4)
    assert eval_f(DimensionFunction(1, sympy.Rational(1, 2)), math.exp(-4)) == pytest.approx(math.exp(-4) / 2,
                                                                                              rel=1e-14)


def test_eval_domain():
    with pytest.raises(DomainError):
        eval_f(DimensionFunction(1), 0.5)
    with pytest.raises(DomainError):
        eval_f(DimensionFunction(1), 0.0)


def test_nondecreasing_enforced():
    # s = 0 needs a positive log exponent p so that (-log r)^(-p) increases with r
    assert DimensionFunction(0, 1) is not None
    with pytest.raises(DomainError):
        DimensionFunction(0, -1)
    with pytest.raises(DomainError):
        DimensionFunction(1, -2)
    with pytest.raises(DomainError):
        DimensionFunction(1, 0, -1)


def test_parse_forms():
    f = F("r^0.9")
    assert f.s == sympy.Rational(9, 10) and f.p == 0
    g = F("r^1.2*log^(-1/2)")
    assert g.s == sympy.Rational(6, 5) and g.p == sympy.Rational(1, 2)
    h = F("1/2*r^(log(6)/(log(2)+2))")
    assert h.scale == sympy.Rational(1, 2)
    assert float(h.s) == pytest.approx(math.log(6) / (math.log(2) + 2))
    assert F(str(g)) == g
    assert DimensionFunction.from_dict(g.to_dict()) == g
    with pytest.raises(DomainError):
        F("x^2")


def test_compare_examples():
    assert compare(F("r^0.9"), F("r^1")).relation == "strict"
    g = F("r^1.3*log^(-1/2)")
    v = compare(F("r^1.3"), g)
    assert v.f_precsim_g and v.f_strict_g
    assert compare(g, g).relation == "equivalent"


def test_compare_monomial_examples():
    # r^1.5 decays faster than r, so 1 precedes r^1.5
    assert compare_monomial(F("r^1.5"), 1).relation == "reverse_strict"
    assert compare_monomial(F("r^1"), 1).relation == "equivalent"
    assert compare_monomial(DimensionFunction(1, 1), 1).relation == "reverse_strict"


def test_scale_irrelevant():
    assert compare(F("7*r^1"), F("r^1")).relation == "equivalent"


def test_incomparable_witness():
    f, g = DimensionFunction(2, -1), DimensionFunction(1, 2)
    v = compare(f, g)
    assert v.relation == "incomparable" and not v.comparable
    x, y = v.witness["violates_f_precsim_g"]
    assert x < y and not ratio_nonincreasing_on_grid(f, g, x, y)
    x, y = v.witness["violates_g_precsim_f"]
    assert x < y and not ratio_nonincreasing_on_grid(g, f, x, y)


exponents = st.fractions(min_value=0, max_value=3, max_denominator=8)
logs = st.fractions(min_value=-2, max_value=2, max_denominator=8)


@st.composite
def dim_functions(draw):
    s = draw(exponents)
    p = draw(logs)
    if s == 0:
        p = abs(p) or 1
    elif s + p < 0:
        p = -s
    return DimensionFunction(sympy.Rational(s.numerator, s.denominator), sympy.Rational(p.numerator, p.denominator))


GRID = [math.exp(-1 - 39 * k / 999) for k in range(1000)][::-1]


@settings(max_examples=40, deadline=None)
@given(f=dim_functions(), g=dim_functions())
def test_grid_soundness(f, g):
    v = compare(f, g)
    lr = [float(f.log_eval(math.log(r)) - g.log_eval(math.log(r))) for r in GRID]
    # GRID is increasing in r; f ⪯ g means the log-ratio never increases
    if v.f_precsim_g:
        assert all(b <= a + 1e-12 for a, b in zip(lr, lr[1:]))
    if v.g_precsim_f:
        assert all(b >= a - 1e-12 for a, b in zip(lr, lr[1:]))
    if not v.comparable:
        assert not ratio_nonincreasing_on_grid(f, g, *v.witness["violates_f_precsim_g"])


@settings(max_examples=80, deadline=None)
@given(f=dim_functions(), g=dim_functions(), h=dim_functions())
def test_transitivity(f, g, h):
    if compare(f, g).f_precsim_g and compare(g, h).f_precsim_g:
        assert compare(f, h).f_precsim_g


@settings(max_examples=80, deadline=None)
@given(f=dim_functions(), g=dim_functions())
def test_antisymmetry_of_verdicts(f, g):
    a, b = compare(f, g), compare(g, f)
    assert a.f_precsim_g == b.g_precsim_f and a.f_strict_g == b.g_strict_f


@settings(max_examples=60, deadline=None)
@given(f=dim_functions(), g=dim_functions())
def test_strict_limit_heuristic(f, g):
    # heuristic only: a strict relation shows up as growth of f/g towards 0
    v = compare(f, g)
    log_ratio = lambda L: float(f.log_eval(-L) - g.log_eval(-L))
    if v.f_strict_g:
        assert log_ratio(40) > log_ratio(1)
