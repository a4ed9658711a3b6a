"""Executable form of the divergence-side construction for integer bases.

For n in the index set P the construction picks ``m = m(n)``, a block end
``k_j``, a radius ``omega_n`` and, inside a host ball ``B(y, omega_n)``, a
family of hyperrectangles carrying a uniform probability measure mu whose
ball masses are compared against ``f(r) / omega_n^d``.

All scale arithmetic is done on logarithms in mpmath, since targets such
as ``exp(-n^2)`` leave double range quickly.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import exact
from .beta_core import BetaVector, cylinder
from .dimension import DimensionFunction
from .errors import DomainError, UnsupportedError
from .hitset import LipschitzMap, solve_anchor
from .series import ApproxFunction, block_permutation, parse_psi_tuple, sn_breakdown


@dataclass(frozen=True)
class BlockStructure:
    cuts: tuple
    values: tuple

    def block_of(self, i: int) -> tuple[int, int]:
        """``(k_{j-1}, k_j)`` for the block containing the 1-based index i."""
        for lo, hi in zip(self.cuts, self.cuts[1:]):
            if lo < i <= hi:
                return lo, hi
        raise DomainError(f"index {i} outside 1..{self.cuts[-1]}")


def block_structure(betas) -> BlockStructure:
    """Maximal runs of equal bases, as cut indices ``0 = k_0 < k_1 < ... < k_s = d``."""
    betas = BetaVector.parse(betas)
    cuts = [0]
    values = []
    for i in range(1, betas.d + 1):
        last = i == betas.d
        if last or exact.sign(betas[i].expr - betas[i - 1].expr) != 0:
            cuts.append(i)
            values.append(str(betas[i - 1].expr))
    return BlockStructure(tuple(cuts), tuple(values))


def _prec_for(log_scales) -> int:
    smallest = min(float(v) for v in log_scales)
    return 80 + int(math.ceil(-smallest / math.log(2)))


@dataclass
class PMembership:
    n: int
    member: bool
    sorted_ok: bool
    lower_ok: bool
    upper_ok: bool
    log_term: float

    def __bool__(self):
        return self.member

    def to_dict(self) -> dict:
        return {"n": self.n, "in_P": self.member, "sorted_within_blocks": self.sorted_ok,
                "term_at_least_n^-2": self.lower_ok, "term_at_most_1": self.upper_ok,
                "log_term": self.log_term}


def _apply(perm: Sequence[int], Psi: Sequence) -> tuple:
    return tuple(Psi[i] for i in perm)


def in_P(n: int, betas, Psi, f: DimensionFunction, perm: Optional[Sequence[int]] = None) -> PMembership:
    """Membership of n in P after the within-block sort of Psi.

    ``perm`` defaults to the eventual within-block order (nonincreasing psi).
    """
    betas = BetaVector.parse(betas)
    Psi = parse_psi_tuple(Psi, betas.d)
    if perm is None:
        perm = block_permutation(betas, Psi)
    Psi = _apply(perm, Psi)
    blocks = block_structure(betas)
    sorted_ok = True
    for lo, hi in zip(blocks.cuts, blocks.cuts[1:]):
        vals = [Psi[i].log_value(n) for i in range(lo, hi)]
        sorted_ok &= all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    term = sn_breakdown(betas, Psi, f, n).log_sn + n * sum(betas.logs())
    lower = term >= -2 * math.log(n) - 1e-12
    upper = term <= 1e-12
    return PMembership(n, bool(sorted_ok and lower and upper), bool(sorted_ok), bool(lower), bool(upper), term)


@dataclass
class DivergenceFrame:
    n: int
    membership: PMembership
    perm: tuple
    m: Optional[int]
    kj: Optional[int]
    kj_prev: Optional[int]
    log_omega: Optional[mpmath.mpf]
    log_phi: tuple
    log_sn: mpmath.mpf
    log_side: tuple
    log_rect: tuple
    chain: tuple
    checks: dict = field(default_factory=dict)

    @property
    def in_P(self) -> bool:
        return self.membership.member

    @property
    def d(self) -> int:
        return len(self.log_side)

    @property
    def omega(self) -> mpmath.mpf:
        return mpmath.exp(self.log_omega)

    def log_A_prime(self) -> list:
        """Logs of ``{beta_i^-n : i > k_j} ∪ {beta_i^-n psi_i : i > m}``."""
        out = [self.log_side[i] for i in range(self.kj, self.d)]
        out += [self.log_rect[i] for i in range(self.m, self.d)]
        return sorted(out)

    def to_dict(self) -> dict:
        f = lambda v: None if v is None else float(v)
        return {
            "n": self.n, "in_P": self.in_P, "membership": self.membership.to_dict(),
            "permutation": [i + 1 for i in self.perm], "m": self.m, "k_j": self.kj, "k_j_prev": self.kj_prev,
            "log_omega": f(self.log_omega), "log_phi": [float(v) for v in self.log_phi],
            "log_s_n": float(self.log_sn), "chain": [float(v) for v in self.chain],
            "checks": self.checks,
        }


def frame(n: int, betas, Psi, f: DimensionFunction, perm: Optional[Sequence[int]] = None) -> DivergenceFrame:
    """m(n), k_j, omega_n, Phi and the invariant checks at level n (diagnostics mode if n is not in P)."""
    betas = BetaVector.parse(betas)
    d = betas.d
    Psi = parse_psi_tuple(Psi, d)
    if perm is None:
        perm = block_permutation(betas, Psi)
    perm = tuple(perm)
    membership = in_P(n, betas, Psi, f, perm)
    Psi = _apply(perm, Psi)
    blocks = block_structure(betas)
    sb = sn_breakdown(betas, Psi, f, n)
    logb = [mpmath.mpf(b.log) for b in betas]
    log_psi = [mpmath.mpf(p.log_value(n)) for p in Psi]
    with mpmath.workprec(_prec_for([sb.log_sn] + log_psi) + 40):
        logb = [mpmath.log(b.value) for b in betas]
        log_psi = [mpmath.mpf(p.log_value(n)) for p in Psi]
        log_sn = mpmath.mpf(sb.log_sn)
        S = log_sn + n * mpmath.fsum(logb)
        side = tuple(-n * lb for lb in logb)
        rect = tuple(-n * lb + lp for lb, lp in zip(logb, log_psi))

        def level(ell: int, kj: int) -> mpmath.mpf:
            # log of (s_n prod_{i<=ell} psi_i^-1 prod beta_i^n)^(1/(kj-ell))
            return (S - mpmath.fsum(log_psi[:ell])) / (kj - ell)

        m = kj = kprev = None
        for cand in range(d):
            lo, hi = blocks.block_of(cand + 1)
            if level(cand, hi) >= log_psi[cand]:
                m, kj, kprev = cand, hi, lo
                break
        checks: dict = {}
        if m is None:
            checks["m_exists"] = False
            return DivergenceFrame(n, membership, perm, None, None, None, None, (), log_sn, side, rect, (),
                                   checks)
        checks["m_exists"] = True
        checks["m_minimal"] = all(level(c, blocks.block_of(c + 1)[1]) < log_psi[c] for c in range(m))
        log_omega = -n * logb[m] + level(m, kj)
        alt = (log_sn + mpmath.fsum(n * logb[i] - log_psi[i] for i in range(m))
               + mpmath.fsum(n * logb[i] for i in range(kj, d))) / (kj - m)
        checks["omega_two_forms_rel_err"] = float(abs(mpmath.expm1(alt - log_omega)))
        # eq. identity: (prod_{i>kj} omega beta_i^n) omega^m s_n prod_{i<=m} beta_i^n psi_i^-1 = omega^d
        lhs = mpmath.fsum(log_omega + n * logb[i] for i in range(kj, d)) + m * log_omega + log_sn \
            + mpmath.fsum(n * logb[i] - log_psi[i] for i in range(m))
        checks["identity_rel_err"] = float(abs(mpmath.expm1(lhs - d * log_omega)))
        chain = tuple(level(ell, kj) for ell in range(m, kprev - 1, -1))
        checks["increase_chain_monotone"] = all(a <= b + 1e-12 * (1 + abs(b))
                                                for a, b in zip(chain, chain[1:]))
        # s_n enters as a double, so ties are judged to double precision
        tol = lambda v: 1e-12 * (1 + abs(v))
        checks["omeganp_1"] = all(log_omega <= rect[ell] + tol(rect[ell]) for ell in range(m))
        checks["omeganp_2"] = all(rect[ell] <= log_omega + tol(rect[ell]) and log_omega <= side[ell] + tol(side[ell])
                                  for ell in range(m, kj))
        checks["omeganp_3"] = all(log_omega >= side[ell] - tol(side[ell]) for ell in range(kj, d))
        log4 = mpmath.log(4)
        log_phi = tuple(
            (log_psi[i] if i < m else (n * logb[m] + log_omega if i < kj else mpmath.mpf(0))) - log4
            for i in range(d)
        )
        prod_phi = mpmath.fsum(log_phi)
        checks["phi_product_rel_err"] = float(abs(mpmath.expm1(prod_phi - (S - d * log4))))
    return DivergenceFrame(n, membership, perm, m, kj, kprev, log_omega, log_phi, log_sn, side, rect, chain, checks)


def frame_checks_pass(fr: DivergenceFrame, rel_tol: float = 1e-9) -> bool:
    c = fr.checks
    return bool(c.get("m_exists") and c["m_minimal"] and c["identity_rel_err"] <= rel_tol
                and c["omega_two_forms_rel_err"] <= rel_tol and c["increase_chain_monotone"]
                and c["omeganp_1"] and c["omeganp_2"] and c["omeganp_3"] and c["phi_product_rel_err"] <= rel_tol)


@dataclass
class FrameSweep:
    frames: list
    threshold: Optional[int]
    p_count: int
    verified: int

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "n_in_P": self.p_count, "verified_after_threshold": self.verified,
                "frames": [fr.to_dict() for fr in self.frames]}


def sweep_frames(betas, Psi, f, n_lo: int, n_hi: int) -> FrameSweep:
    """Frames for ``n_lo <= n <= n_hi`` and the measured threshold past which every n in P passes."""
    frames = [frame(n, betas, Psi, f) for n in range(n_lo, n_hi + 1)]
    inP = [fr for fr in frames if fr.in_P]
    threshold = None
    for fr in reversed(inP):
        if not frame_checks_pass(fr):
            break
        threshold = fr.n
    verified = sum(1 for fr in inP if threshold is not None and fr.n >= threshold)
    return FrameSweep(frames, threshold, len(inP), verified)


def permutation_report(betas, Psi, f, n_lo: int, n_hi: int) -> list:
    """P-counts and partial sums of the P-restricted series for every within-block permutation."""
    betas = BetaVector.parse(betas)
    Psi = parse_psi_tuple(Psi, betas.d)
    blocks = block_structure(betas)
    per_block = [list(itertools.permutations(range(lo, hi))) for lo, hi in zip(blocks.cuts, blocks.cuts[1:])]
    out = []
    for combo in itertools.product(*per_block):
        perm = [i for block in combo for i in block]
        terms = [in_P(n, betas, Psi, f, perm) for n in range(n_lo, n_hi + 1)]
        members = [t for t in terms if t.member]
        total = float(sum(math.exp(t.log_term) for t in members))
        out.append({"permutation": [i + 1 for i in perm], "n_in_P": len(members), "partial_sum": total})
    return out


# ------------------------------------------------------- rectangle family

@dataclass
class RectFamily:
    frame: DivergenceFrame
    y: tuple
    axes: list
    prec: int

    @property
    def count(self) -> int:
        return math.prod(len(a) for a in self.axes)

    @property
    def d(self) -> int:
        return len(self.axes)

    def expected_count(self) -> float:
        fr = self.frame
        return float(mpmath.exp(mpmath.fsum(fr.log_omega - fr.log_side[i] for i in range(fr.kj, fr.d))))

    def side_lengths(self) -> list:
        return [[hi - lo for lo, hi in axis] for axis in self.axes]

    def check(self) -> dict:
        """Disjointness, containment in the host ball and the unit cube, count band."""
        with mpmath.workprec(self.prec):
            om = self.frame.omega
            disjoint = all(a[1] <= b[0] for axis in self.axes for a, b in zip(axis, axis[1:]))
            inside = all(max(yi - om, 0) <= lo and hi <= min(yi + om, 1)
                         for yi, axis in zip(self.y, self.axes) for lo, hi in axis)
        return {"disjoint": disjoint, "inside_host": inside, "count": self.count,
                "expected_count": self.expected_count(),
                "count_ratio": self.count / max(self.expected_count(), 1e-300)}

    def to_dict(self) -> dict:
        return {"n": self.frame.n, "y": [float(v) for v in self.y], "omega": float(self.frame.omega),
                "counts": [len(a) for a in self.axes],
                "axes": [[[float(lo), float(hi)] for lo, hi in axis[:1000]] for axis in self.axes]}


def _anchor(beta, n: int, k: int, h: LipschitzMap, prec: int):
    """Anchor of the k-th level-n cylinder of an integer base (all cylinders full)."""
    b = int(beta.expr)
    digits = []
    kk = k
    for _ in range(n):
        digits.append(kk % b)
        kk //= b
    from .beta_core import Beta
    cyl = cylinder(tuple(reversed(digits)), Beta(beta.expr, prec))
    return solve_anchor(cyl, h), cyl.left, cyl.right


def _inner_interval(beta, n, k, h, psi_log, prec):
    z, left, right = _anchor(beta, n, k, h, prec)
    half = mpmath.exp(psi_log - n * mpmath.log(int(beta.expr))) / 2
    return z, max(z - half, left), min(z + half, right)


def default_center(fr: DivergenceFrame, betas, maps, index: Optional[Sequence[int]] = None) -> tuple:
    """A point z of E_n: anchors of the cylinders with indices ``index`` (middle cylinders by default)."""
    betas = BetaVector.parse(betas)
    prec = _prec_for(list(fr.log_rect)) + 40
    z = []
    with mpmath.workprec(prec):
        for i, beta in enumerate(betas):
            b = int(beta.expr)
            k = (b ** fr.n) // 2 if index is None else index[i]
            z.append(_anchor(beta, fr.n, k, maps[i], prec)[0])
    return tuple(z)


def y_grid(fr: DivergenceFrame, z: Sequence, limit: int = 1000) -> list:
    """Grid of spacing ``2 omega_n`` in the first m inner balls, ``y_i = z_i`` for i > m."""
    with mpmath.workprec(_prec_for(list(fr.log_rect)) + 40):
        om = fr.omega
        axes = []
        for i in range(fr.d):
            if i < fr.m:
                half = mpmath.exp(fr.log_rect[i]) / 2
                k = int(mpmath.floor(half / (2 * om)))
                axes.append([z[i] + 2 * om * t for t in range(-k, k + 1)][:limit])
            else:
                axes.append([z[i]])
        return [tuple(p) for p in itertools.islice(itertools.product(*axes), limit)]


def build_rect_family(y: Sequence, fr: DivergenceFrame, betas, Psi, maps) -> RectFamily:
    """The hyperrectangles of the construction inside ``B(y, omega_n)``."""
    betas = BetaVector.parse(betas)
    if not betas.all_integer:
        raise UnsupportedError("the divergence construction needs integer bases")
    if fr.m is None:
        raise DomainError("frame has no admissible m")
    d = betas.d
    Psi = _apply(fr.perm, parse_psi_tuple(Psi, d))
    if isinstance(maps, LipschitzMap):
        maps = (maps,) * d
    maps = tuple(maps)
    n = fr.n
    prec = _prec_for(list(fr.log_rect) + [fr.log_omega]) + 40
    axes = []
    with mpmath.workprec(prec):
        om = fr.omega
        y = tuple(mpmath.mpf(v) for v in y)
        for i, beta in enumerate(betas):
            b = int(beta.expr)
            B = mpmath.mpf(b) ** n
            psi_log = mpmath.mpf(Psi[i].log_value(n))
            lo_host, hi_host = max(y[i] - om, mpmath.mpf(0)), min(y[i] + om, mpmath.mpf(1))
            if i < fr.m:
                k = int(mpmath.floor(y[i] * B))
                z, lo, hi = _inner_interval(beta, n, k, maps[i], psi_log, prec)
                c = min(max(y[i], lo + om / 2), hi - om / 2)
                axes.append([(c - om / 2, c + om / 2)])
            elif i < fr.kj:
                k = int(mpmath.floor(y[i] * B))
                _, lo, hi = _inner_interval(beta, n, k, maps[i], psi_log, prec)
                axes.append([(lo, hi)])
            else:
                k0 = max(int(mpmath.floor(lo_host * B)) - 1, 0)
                k1 = min(int(mpmath.ceil(hi_host * B)) + 1, b ** n - 1)
                ivs = []
                for k in range(k0, k1 + 1):
                    _, lo, hi = _inner_interval(beta, n, k, maps[i], psi_log, prec)
                    if lo_host <= lo and hi <= hi_host and hi > lo:
                        ivs.append((lo, hi))
                axes.append(ivs)
    return RectFamily(fr, y, axes, prec)


@dataclass
class MuMeasure:
    """Uniform probability on the union of the rectangle family."""

    family: RectFamily

    def __post_init__(self):
        with mpmath.workprec(self.family.prec):
            self._starts = [[lo for lo, _ in axis] for axis in self.family.axes]

    def axis_mass(self, i: int, lo, hi) -> mpmath.mpf:
        """``(1/n_i) sum |[lo,hi) ∩ I| / |I|`` over the axis intervals."""
        axis = self.family.axes[i]
        starts = self._starts[i]
        from bisect import bisect_left, bisect_right

        j0 = max(bisect_right(starts, lo) - 1, 0)
        j1 = bisect_left(starts, hi)
        total = mpmath.mpf(0)
        for a, b in axis[j0:j1]:
            ov = min(b, hi) - max(a, lo)
            if ov > 0:
                total += ov / (b - a)
        return total / len(axis)


def mu_ball(mu: MuMeasure, center: Sequence, r) -> mpmath.mpf:
    """``mu(B(center, r))`` for the max-norm ball, exactly up to working precision."""
    with mpmath.workprec(mu.family.prec):
        r = mpmath.mpf(r)
        mass = mpmath.mpf(1)
        for i, c in enumerate(center):
            c = mpmath.mpf(c)
            mass *= mu.axis_mass(i, c - r, c + r)
            if mass == 0:
                break
        return mass


@dataclass
class BallBoundReport:
    n: int
    sup_ratio: float
    regimes: dict
    samples: int
    omega: float

    def to_dict(self) -> dict:
        return {"n": self.n, "sup_ratio": self.sup_ratio, "regimes": self.regimes, "samples": self.samples,
                "omega": self.omega}


def ball_bound(family: RectFamily, f: DimensionFunction, samples: int, rng: np.random.Generator) -> BallBoundReport:
    """Sup over sampled balls of ``mu(B(x, r)) omega^d / f(r)``, x in a random rectangle.

    Radii are log-uniform over three regimes: below ``min A'_n``, between
    ``min A'_n`` and ``max A'_n``, and from ``max A'_n`` up to ``omega_n``.
    """
    fr = family.frame
    mu = MuMeasure(family)
    aprime = fr.log_A_prime()
    lo_log, hi_log = aprime[0], aprime[-1]
    bands = {
        "case1": (lo_log - 5, lo_log),
        "case2": (lo_log, hi_log),
        "case3": (hi_log, fr.log_omega),
    }
    bands = {k: v for k, v in bands.items() if v[1] > v[0]}
    names = list(bands)
    counts = {k: 0 for k in names}
    best = -math.inf
    d = family.d
    with mpmath.workprec(family.prec):
        for t in range(samples):
            name = names[t % len(names)]
            a, b = bands[name]
            log_r = mpmath.mpf(a) + (mpmath.mpf(b) - mpmath.mpf(a)) * mpmath.mpf(rng.random())
            if log_r > -1:
                continue
            x = []
            for axis in family.axes:
                lo, hi = axis[int(rng.integers(len(axis)))]
                x.append(lo + (hi - lo) * mpmath.mpf(rng.random()))
            mass = mu_ball(mu, x, mpmath.exp(log_r))
            if mass <= 0:
                continue
            val = float(mpmath.log(mass) + d * fr.log_omega - f.log_eval(log_r))
            counts[name] += 1
            best = max(best, val)
    return BallBoundReport(fr.n, math.exp(best), counts, samples, float(fr.omega))


def frame_to_json(fr: DivergenceFrame) -> str:
    return json.dumps(fr.to_dict(), indent=1)
