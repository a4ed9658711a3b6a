import json
import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from betatargets.beta_core import Beta, cylinder, enumerate_full
from betatargets.errors import DomainError, PreconditionError, UnsupportedError
from betatargets.hitset import (
    LipschitzMap,
    build_hit_region,
    hit_enclosures,
    hit_interval,
    region_measure_1d,
    solve_anchor,
    t_power,
)
from betatargets.intervals import IntervalUnion, union_measure

TWO = Beta.parse(2)
PHI = Beta.parse("golden")


def close(a, b, tol=1e-25):
    return abs(mpmath.mpf(a) - mpmath.mpf(b)) <= tol


# anchors

def test_anchor_constant():
    assert close(solve_anchor(cylinder((0, 0, 0), TWO), LipschitzMap.constant("0.5")), mpmath.mpf(1) / 16)


def test_anchor_identity():
    assert solve_anchor(cylinder((0,), TWO), LipschitzMap.identity()) == 0


def test_anchor_golden_closed_form():
    cyl = cylinder((1, 0), PHI)
    assert cyl.is_full
    z = solve_anchor(cyl, LipschitzMap.constant("0.3"))
    with mpmath.workprec(PHI.precision_bits):
        phi = PHI.value
        expected = 1 / phi + mpmath.mpf(3) / 10 / phi ** 2
    assert close(z, expected)
    assert abs(float(z) - 0.73262) < 1e-5


def test_anchor_bisection_matches_closed_form():
    # tabulated maps go through bisection; an affine table must agree with the affine closed form
    # up to the double rounding of the table values
    table = LipschitzMap.tabulated([0, 0.5, 1], [0.1, 0.35, 0.6], 0.5)
    affine = LipschitzMap.affine("0.5", "0.1")
    for word in [(0, 1, 0), (1, 1, 1), (0, 0, 0)]:
        cyl = cylinder(word, TWO)
        tol = 1e-15
        assert abs(solve_anchor(cyl, table) - solve_anchor(cyl, affine)) <= tol


def test_anchor_precondition():
    with pytest.raises(PreconditionError):
        solve_anchor(cylinder((0,), TWO), LipschitzMap.tabulated([0, 1], [0, 0], 3.0))


def test_tabulated_bound_is_checked():
    with pytest.raises(DomainError):
        LipschitzMap.tabulated([0, 1], [0.0, 0.9], 0.5)


def test_boundary_anchor_flagged():
    enc = hit_enclosures(cylinder((1, 1), TWO), LipschitzMap.identity(), "0.1")
    assert enc.boundary_anchor
    assert close(enc.center, 1)
    lo, hi = enc.inner_interval()
    assert hi <= enc.cylinder.right


# enclosures

def test_enclosures_example():
    enc = hit_enclosures(cylinder((0, 0, 0), TWO), LipschitzMap.constant("0.5"), "0.1")
    assert close(enc.outer.center, mpmath.mpf(1) / 16) and close(enc.outer.radius, mpmath.mpf("0.025"), 1e-30)
    assert enc.inner.center == enc.outer.center
    assert close(enc.inner.radius, mpmath.mpf("0.00625"), 1e-30)


def test_enclosures_whole_cylinder():
    enc = hit_enclosures(cylinder((0,), TWO), LipschitzMap.constant(0), "0.999")
    lo, hi = enc.outer.interval
    assert lo <= 0 and hi >= 0.5


def test_enclosures_large_lipschitz_rejected():
    with pytest.raises(PreconditionError):
        hit_enclosures(cylinder((0,), TWO), LipschitzMap.tabulated([0, 1], [0, 0], 3.0), "0.1")


def test_outer_radius_enlarged_for_large_lipschitz():
    # with L > beta^n / 2 the radius 2r/beta^n is too small and r/(beta^n - L) takes over
    h = LipschitzMap.tabulated([0, 0.5, 1], [0, 0.75, 0], 1.5)
    enc = hit_enclosures(cylinder((0,), TWO), h, "0.1")
    assert close(enc.outer.radius, mpmath.mpf("0.2"), 1e-25)
    lo, hi = hit_interval(cylinder((0,), TWO), h, "0.1")
    assert enc.outer.interval[0] <= lo and hi <= enc.outer.interval[1]


def test_hit_interval_dyadic():
    lo, hi = hit_interval(cylinder((0, 0, 0), TWO), LipschitzMap.constant("0.5"), "0.1")
    assert close(lo, mpmath.mpf("0.4") / 8) and close(hi, mpmath.mpf("0.6") / 8)


_MAPS = {
    "zero": LipschitzMap.constant(0),
    "const": LipschitzMap.constant("0.37"),
    "identity": LipschitzMap.identity(),
    "affine": LipschitzMap.affine("-0.5", "0.7"),
    "table": LipschitzMap.tabulated([0, 0.3, 1], [0.2, 0.5, 0.1], 1.0),
}


@settings(max_examples=150, deadline=None)
@given(beta=st.sampled_from(["2", "3", "2.5", "golden"]), n=st.integers(1, 12),
       kind=st.sampled_from(sorted(_MAPS)), r=st.floats(0.01, 0.99), data=st.data())
def test_sandwich(beta, n, kind, r, data):
    b = Beta.parse(beta)
    h = _MAPS[kind]
    if h.lipschitz_bound >= float(b.power(n)):
        return
    fulls = enumerate_full(b, min(n, 6))
    if n > 6:
        word = data.draw(st.sampled_from(fulls)).word
        word = word + (0,) * (n - len(word))
    else:
        word = data.draw(st.sampled_from(fulls)).word
    cyl = cylinder(word, b)
    enc = hit_enclosures(cyl, h, r)
    assert enc.inner is not None and enc.inner.center == enc.outer.center
    lo, hi = enc.inner_interval()
    # stay off cylinder endpoints, where T^n jumps and rounding decides the branch
    unit = st.floats(1e-9, 1 - 1e-9)
    with mpmath.workprec(b.precision_bits):
        for t in data.draw(st.lists(unit, min_size=1, max_size=8)):
            x = lo + (hi - lo) * mpmath.mpf(t)
            assert abs(t_power(x, b, n) - h(x)) < r
        olo, ohi = enc.outer.interval
        for t in data.draw(st.lists(unit, min_size=1, max_size=8)):
            x = cyl.left + cyl.length * mpmath.mpf(t)
            if olo <= x <= ohi:
                continue
            assert abs(t_power(x, b, n) - h(x)) >= r


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 8), r1=st.floats(0.01, 0.98), r2=st.floats(0.01, 0.98),
       kind=st.sampled_from(sorted(_MAPS)), k=st.integers(0, 255))
def test_hit_set_monotone_in_r(n, r1, r2, kind, k):
    r1, r2 = sorted((r1, r2))
    word = tuple((k >> i) & 1 for i in range(n))
    cyl = cylinder(word, TWO)
    a = hit_interval(cyl, _MAPS[kind], r1)
    b = hit_interval(cyl, _MAPS[kind], r2)
    if a[1] > a[0]:
        assert b[0] <= a[0] and a[1] <= b[1]
    e1, e2 = hit_enclosures(cyl, _MAPS[kind], r1), hit_enclosures(cyl, _MAPS[kind], r2)
    assert e1.outer.radius <= e2.outer.radius and e1.inner.radius <= e2.inner.radius


# regions

def test_region_weighted_example():
    reg = build_hit_region([2], [lambda n: 2.0 ** -n], LipschitzMap.constant(0), 2)
    assert len(reg.axes[0]) == 4
    assert all(abs(float(b.inner_radius) - 2 ** -4 / 2) < 1e-15 for b in reg.axes[0])


def test_region_axis_counts():
    rates = (lambda n: math.exp(-1.2 * n), lambda n: math.exp(-n * n))
    reg = build_hit_region([2, 3], rates, (LipschitzMap.constant(0),) * 2, 2)
    assert [len(a) for a in reg.axes] == [4, 9]


def test_region_multiplicative_anchor_membership():
    maps = (LipschitzMap.constant("0.3"), LipschitzMap.constant("0.6"))
    reg = build_hit_region([2, 3], 0.01, maps, 3, mode="multiplicative")
    assert abs(reg.delta - 4 * 0.01) < 1e-15
    for a1 in reg.anchors[0][:3]:
        for a2 in reg.anchors[1][:3]:
            assert reg.contains((a1.z, a2.z))
            assert reg.pullback_contains((a1.z, a2.z))


def test_multiplicative_needs_large_power():
    maps = (LipschitzMap.affine("0.9", "0"),) * 2
    with pytest.raises(PreconditionError):
        build_hit_region(["1.5", "1.5"], 0.01, maps, 1, mode="multiplicative")


@settings(max_examples=200, deadline=None)
@given(x1=st.floats(0, 1, exclude_max=True), x2=st.floats(0, 1, exclude_max=True))
def test_pullback_soundness(x1, x2):
    maps = (LipschitzMap.affine("0.5", "0.2"), LipschitzMap.identity())
    reg = build_hit_region([2, 3], 0.05, maps, 3, mode="multiplicative")
    if reg.contains((mpmath.mpf(x1), mpmath.mpf(x2))):
        assert reg.pullback_contains((mpmath.mpf(x1), mpmath.mpf(x2)))


def test_region_measure_examples():
    assert union_measure([(i / 4, i / 4 + 1 / 16) for i in range(4)]) == pytest.approx(0.25)
    assert union_measure([(0.1, 0.3), (0.1, 0.3)]) == pytest.approx(0.2)
    reg = build_hit_region([2], [0.25], LipschitzMap.constant(0), 2)
    # anchors sit on left endpoints, so each inner ball is cut in half by its cylinder
    assert float(region_measure_1d(reg)) == pytest.approx(0.125, abs=1e-15)


def test_region_measure_rejects_multiplicative():
    reg = build_hit_region([2, 3], 0.01, (LipschitzMap.constant(0),) * 2, 3, mode="multiplicative")
    with pytest.raises(UnsupportedError):
        region_measure_1d(reg)


def test_inner_boxes_disjoint_and_nested():
    reg = build_hit_region(["2.5"], [0.8], LipschitzMap.constant("0.4"), 4)
    inner, outer, exact = (reg.axis_union(0, w) for w in ("inner", "outer", "exact"))
    ivs = [b.inner_interval() for b in reg.axes[0] if b.inner_radius is not None]
    assert float(inner.measure) == pytest.approx(float(sum(hi - lo for lo, hi in ivs)), rel=1e-12)
    assert inner.measure <= exact.measure + 1e-30 <= outer.measure + 1e-30


def test_interval_union_algebra():
    u = IntervalUnion.from_intervals([(0, 0.2), (0.1, 0.3), (0.5, 0.6)])
    assert len(u) == 2
    assert float(u.measure) == pytest.approx(0.4)
    assert float(u.complement().measure) == pytest.approx(0.6)
    v = IntervalUnion.from_intervals([(0.25, 0.55)])
    assert float(u.intersect(v).measure) == pytest.approx(0.1)
    assert float(u.union(v).measure) == pytest.approx(0.6)


def test_region_json_roundtrip():
    reg = build_hit_region([2, 3], (0.5, 0.5), (LipschitzMap.identity(), LipschitzMap.constant(0)), 2)
    data = json.loads(reg.to_json())
    assert data["mode"] == "weighted" and len(data["axes"][1]) == 9
    assert LipschitzMap.from_dict(reg.maps[0].to_dict()) == reg.maps[0]
