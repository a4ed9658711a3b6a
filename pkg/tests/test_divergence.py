import json
import math

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from betatargets.dimension import DimensionFunction
from betatargets.divergence import (
    MuMeasure,
    ball_bound,
    block_structure,
    build_rect_family,
    default_center,
    frame,
    frame_checks_pass,
    frame_to_json,
    in_P,
    mu_ball,
    permutation_report,
    sweep_frames,
    y_grid,
)
from betatargets.errors import DomainError, UnsupportedError
from betatargets.hitset import LipschitzMap
from betatargets.series import ApproxFunction, block_permutation, rectangle_verdict
from betatargets.beta_core import BetaVector
from oracles import omega_by_properties

F = DimensionFunction.parse
ZERO = LipschitzMap.constant(0)

D1 = ([2], ["2^-n"], F("r^(1/2)"))
D2 = ([2, 3], ["exp(-2*n)", "exp(-n^2)"], F("1/2*r^(log(6)/(log(2)+2))"))
# tied bases with the first block given out of order; critical exponent, term 1/2
D3 = ([2, 2, 3], ["exp(-3*n)", "exp(-n)", "exp(-2*n)"],
      DimensionFunction(2 + (sympy.log(2) - 3) / (sympy.log(3) + 2), 0, sympy.Rational(1, 2)))


def test_block_structure_examples():
    assert block_structure([2, 2, 3]).cuts == (0, 2, 3)
    assert block_structure([2, 3, 5]).cuts == (0, 1, 2, 3)
    assert block_structure([4, 4, 4, 4]).cuts == (0, 4)
    assert block_structure([2, 2, 3]).block_of(2) == (0, 2)
    with pytest.raises(DomainError):
        block_structure([3, 2])


def test_in_P_examples():
    assert all(in_P(n, [2], ["2^-n"], F("r^(1/2)")) for n in (2, 10, 40))
    # with f = r^0.4 the term is 2^(0.2 n) > 1
    m = in_P(10, [2], ["2^-n"], F("r^0.4"))
    assert not m and not m.upper_ok
    assert m.log_term == pytest.approx(0.2 * 10 * math.log(2), rel=1e-12)
    low = in_P(10, [2], ["2^-n"], F("1e-9*r^(1/2)"))
    assert not low and not low.lower_ok


def test_block_permutation_sorts_ties():
    betas = BetaVector.parse([2, 2, 3])
    Psi = [ApproxFunction.parse(p) for p in D3[1]]
    assert block_permutation(betas, Psi) == [1, 0, 2]
    assert not in_P(10, *D3, perm=[0, 1, 2]).sorted_ok


def test_frame_d1_is_sn():
    fr = frame(10, *D1)
    assert fr.in_P and fr.m == 0 and fr.kj == 1
    assert float(fr.log_omega) == pytest.approx(-10 * math.log(2), rel=1e-12)
    assert frame_checks_pass(fr)


def test_frame_d2_example():
    fr = frame(8, *D2)
    assert fr.in_P and (fr.m, fr.kj) == (0, 1)
    assert frame_checks_pass(fr)
    data = json.loads(frame_to_json(fr))
    assert data["m"] == 0 and data["checks"]["m_exists"]


def test_frame_diagnostics_outside_P():
    fr = frame(8, [2, 3], ["exp(-1.2*n)", "exp(-n^2)"], F("r^0.9"))
    assert not fr.in_P
    assert fr.membership.log_term > 0
    assert fr.checks["m_exists"]


@pytest.mark.parametrize("cfg", [D1, D2, D3], ids=["d1", "d2", "d3"])
def test_sweep_all_in_P_verified(cfg):
    sw = sweep_frames(*cfg, 2, 60)
    assert sw.p_count >= 50
    assert sw.threshold is not None and sw.verified == sw.p_count
    assert rectangle_verdict(*cfg).conclusion == "FullMeasure"


@pytest.mark.parametrize("cfg", [D1, D2, D3], ids=["d1", "d2", "d3"])
def test_frame_matches_property_oracle(cfg):
    betas, Psi, f = cfg
    bv = BetaVector.parse(betas)
    parsed = [ApproxFunction.parse(p) for p in Psi]
    perm = block_permutation(bv, parsed)
    cuts = block_structure(betas).cuts
    for n in range(4, 40, 5):
        fr = frame(n, betas, Psi, f)
        lpsi = [parsed[i].log_value(n) for i in perm]
        m, lw = omega_by_properties(bv.logs(), lpsi, float(fr.log_sn), cuts, n)
        assert m == fr.m
        assert lw == pytest.approx(float(fr.log_omega), rel=1e-9)


def test_permutation_report():
    rows = permutation_report(*D3, 5, 30)
    assert len(rows) == 2
    best = next(r for r in rows if r["permutation"] == [2, 1, 3])
    assert best["n_in_P"] == 26 and best["partial_sum"] > 0


# rectangles and mu

def test_family_d1_single_interval():
    fr = frame(6, *D1)
    z = default_center(fr, D1[0], (ZERO,))
    fam = build_rect_family(z, fr, *D1[:2], (ZERO,))
    assert fam.count == 1
    (lo, hi), = fam.axes[0]
    # the inner ball of radius 2^-12 / 2 about the left endpoint, clipped to its cylinder
    assert float(hi - lo) == pytest.approx(2.0 ** -13, rel=1e-12)
    assert fam.check()["inside_host"]


def test_family_d2_count_band():
    fr = frame(8, *D2)
    z = default_center(fr, D2[0], (ZERO, ZERO))
    fam = build_rect_family(z, fr, *D2[:2], (ZERO, ZERO))
    chk = fam.check()
    assert chk["disjoint"] and chk["inside_host"]
    assert 0.25 <= chk["count_ratio"] <= 4
    assert chk["expected_count"] == pytest.approx(float(fr.omega) * 3 ** 8, rel=1e-9)


def test_family_d3():
    fr = frame(6, *D3)
    maps = (ZERO,) * 3
    z = default_center(fr, D3[0], maps)
    fam = build_rect_family(z, fr, *D3[:2], maps)
    chk = fam.check()
    assert chk["disjoint"] and chk["inside_host"] and fam.count >= 1


def test_family_needs_integer_bases():
    cfg = (["golden", 3], ["1/n", "exp(-n)"], F("r^1"))
    fr = frame(8, *cfg)
    with pytest.raises(UnsupportedError):
        build_rect_family((0.5, 0.5), fr, *cfg[:2], (ZERO, ZERO))


def test_y_grid_spacing():
    fr = frame(8, *D2)
    z = default_center(fr, D2[0], (ZERO, ZERO))
    ys = y_grid(fr, z, limit=50)
    assert len(ys) >= 1 and all(y[1] == z[1] for y in ys)


def _family(n=8):
    fr = frame(n, *D2)
    z = default_center(fr, D2[0], (ZERO, ZERO))
    return build_rect_family(z, fr, *D2[:2], (ZERO, ZERO))


def test_mu_total_mass():
    fam = _family()
    mu = MuMeasure(fam)
    assert mu_ball(mu, fam.y, 2) == pytest.approx(1, abs=1e-30)


def test_mu_small_ball_direct_sum():
    # a ball inside one rectangle carries vol(B) / (count * vol(R))
    fam = _family()
    mu = MuMeasure(fam)
    with mpmath.workprec(fam.prec):
        rect = [axis[len(axis) // 2] for axis in fam.axes]
        centre = [(lo + hi) / 2 for lo, hi in rect]
        r = min(hi - lo for lo, hi in rect) / 4
        vol = mpmath.fprod(hi - lo for lo, hi in rect)
        expected = (2 * r) ** 2 / (fam.count * vol)
        assert abs(mu_ball(mu, centre, r) / expected - 1) < 1e-20


@settings(max_examples=40, deadline=None)
@given(x=st.floats(0, 1), y=st.floats(0, 1), r1=st.floats(1e-8, 0.3), r2=st.floats(1e-8, 0.3))
def test_mu_monotone(x, y, r1, r2):
    mu = MuMeasure(_FAM)
    r1, r2 = sorted((r1, r2))
    a, b = mu_ball(mu, (x, y), r1), mu_ball(mu, (x, y), r2)
    assert 0 <= a <= b <= 1 + 1e-30


_FAM = _family()


def test_ball_bound_finite():
    rep = ball_bound(_FAM, D2[2], 600, np.random.default_rng(3))
    assert 0 < rep.sup_ratio < 10
    assert sum(rep.regimes.values()) > 400 and all(v > 0 for v in rep.regimes.values())
