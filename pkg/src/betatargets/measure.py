"""Lebesgue-measure estimates and f-content bounds for truncated limsup sets.

Exact one-dimensional measures for integer bases use rational arithmetic on
the lattice structure of the target sets; Monte Carlo (with Hoeffding
confidence radii) covers higher dimensions and non-integer bases.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
import sympy

from . import exact
from .beta_core import Beta, BetaVector, cylinder, enumerate_full
from .covering import brute_force_fcover_unions
from .dimension import DimensionFunction
from .divergence import MuMeasure, RectFamily, mu_ball
from .errors import DomainError, PreconditionError, UnsupportedError
from .hitset import HitRegion, LipschitzMap, hit_interval
from .intervals import IntervalUnion
from .series import ApproxFunction, parse_psi_tuple

CONFIDENCE = 0.99
CHUNK = 100_000
TAIL_DIGITS = 64


def hoeffding_radius(samples: int, confidence: float = CONFIDENCE) -> float:
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * samples))


@dataclass(frozen=True)
class TailSpec:
    """The union of the level-n target sets for ``N <= n <= M``.

    ``mode`` is ``weighted`` (every axis hits) or ``multiplicative``
    (product of distances below psi); ``full_only`` keeps only points whose
    level-n cylinder is full on every axis.
    """

    betas: BetaVector
    Psi: tuple
    maps: tuple
    N: int
    M: int
    mode: str = "weighted"
    full_only: bool = False

    def __post_init__(self):
        object.__setattr__(self, "betas", BetaVector.parse(self.betas))
        d = self.betas.d
        k = 1 if self.mode == "multiplicative" else d
        object.__setattr__(self, "Psi", parse_psi_tuple(self.Psi, k))
        maps = self.maps
        if isinstance(maps, LipschitzMap):
            maps = (maps,) * d
        object.__setattr__(self, "maps", tuple(maps))
        if len(self.maps) != d:
            raise DomainError(f"need {d} maps, got {len(self.maps)}")
        if self.mode not in ("weighted", "multiplicative"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if not 1 <= self.N <= self.M:
            raise DomainError("need 1 <= N <= M")

    @property
    def d(self) -> int:
        return self.betas.d

    def psi_values(self) -> np.ndarray:
        """``psi_i(n)`` for ``n = N..M``, shape ``(M-N+1, k)``."""
        ns = range(self.N, self.M + 1)
        return np.array([[min(p.value(n), 1.0) for p in self.Psi] for n in ns])


@dataclass
class MeasureEstimate:
    estimate: float
    radius: float
    samples: int
    seed: Optional[int]
    meta: dict = field(default_factory=dict)

    @property
    def interval(self) -> tuple[float, float]:
        return self.estimate - self.radius, self.estimate + self.radius

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "confidence_radius": self.radius, "confidence": CONFIDENCE,
                "samples": self.samples, "seed": self.seed, **self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _shift_tails(digits: np.ndarray, b: int, N: int, M: int) -> np.ndarray:
    size, total = digits.shape
    tails = np.empty((size, M - N + 1))
    v = np.zeros(size)
    for k in range(total - 1, N - 1, -1):
        v = (digits[:, k] + v) / b
        # v is now the value of digits k, k+1, ... (0-based), i.e. T^k x
        if k <= M:
            tails[:, k - N] = v
    return tails


def _tails_general(beta: Beta, N: int, M: int, size: int, rng: np.random.Generator):
    """x, ``T^n x`` and per-level fullness for a non-integer base, in mpmath."""
    prec = int(M * math.log2(float(beta.value))) + 96
    xs = np.empty(size)
    tails = np.empty((size, M - N + 1))
    full = np.empty((size, M - N + 1), dtype=bool)
    with mpmath.workprec(prec):
        b = mpmath.mpf(str(sympy.N(beta.expr, int(prec * 0.31) + 10)))
        tol = mpmath.ldexp(1, -(prec - 40))
        for s in range(size):
            bits = int.from_bytes(rng.bytes(prec // 8 + 1), "little") >> (8 * (prec // 8 + 1) - prec)
            y = mpmath.ldexp(bits, -prec)
            xs[s] = float(y)
            image = mpmath.mpf(1)
            for k in range(1, M + 1):
                by = b * y
                j = int(mpmath.floor(by))
                y = by - j
                image = min(mpmath.mpf(1), b * image - j)
                if abs(image - 1) < tol:
                    image = mpmath.mpf(1)
                if k >= N:
                    tails[s, k - N] = float(y)
                    full[s, k - N] = image == 1
    return xs, tails, full


def _hits(spec: TailSpec, xs: list, tails: list, full: list) -> np.ndarray:
    """Boolean ``(size,)``: the point lies in some level-n target set, ``N <= n <= M``."""
    psi = spec.psi_values()
    if spec.mode == "weighted":
        hit = None
        for i in range(spec.d):
            h = np.asarray(spec.maps[i](xs[i]), dtype=float)
            if h.ndim == 0:
                h = np.full(xs[i].shape, float(h))
            axis = np.abs(tails[i] - h[:, None]) < psi[None, :, i]
            hit = axis if hit is None else hit & axis
    else:
        prod = None
        for i in range(spec.d):
            h = np.asarray(spec.maps[i](xs[i]), dtype=float)
            if h.ndim == 0:
                h = np.full(xs[i].shape, float(h))
            dist = np.abs(tails[i] - h[:, None])
            prod = dist if prod is None else prod * dist
        hit = prod < psi[None, :, 0]
    if spec.full_only:
        for fl in full:
            hit &= fl
    return hit.any(axis=1)


def mc_lebesgue(spec: TailSpec, samples: int, seed: int = 0) -> MeasureEstimate:
    """Monte Carlo estimate of the Lebesgue measure of the truncated union, with a 99% Hoeffding radius."""
    if samples <= 0:
        raise DomainError("samples must be positive")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    integer = spec.betas.all_integer
    chunk = CHUNK if integer else 2_000
    while done < samples:
        size = min(chunk, samples - done)
        xs, tails, full = [], [], []
        for beta in spec.betas:
            if beta.is_integer:
                b = int(beta.expr)
                digits = rng.integers(0, b, size=(size, spec.M + TAIL_DIGITS), dtype=np.int64)
                tails.append(_shift_tails(digits, b, spec.N, spec.M))
                xs.append(_shift_tails(digits, b, 0, 0)[:, 0])
                full.append(np.ones((size, spec.M - spec.N + 1), dtype=bool))
            else:
                x, t, fl = _tails_general(beta, spec.N, spec.M, size, rng)
                xs.append(x)
                tails.append(t)
                full.append(fl)
        hits += int(_hits(spec, xs, tails, full).sum())
        done += size
    return MeasureEstimate(hits / samples, hoeffding_radius(samples), samples, seed,
                           {"N": spec.N, "M": spec.M, "mode": spec.mode, "full_only": spec.full_only})


# ---------------------------------------------------------------- exact 1d

def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    expr = exact.to_expr(x)
    if not expr.is_Rational:
        raise UnsupportedError(f"exact lattice measures need rational values, got {x}")
    return Fraction(int(expr.p), int(expr.q))


def _target(h: Fraction, psi: Fraction) -> tuple[Fraction, Fraction]:
    return max(h - psi, Fraction(0)), min(h + psi, Fraction(1))


def exact_union_measure(b: int, h, psi: Callable[[int], Fraction], N: int, M: int) -> Fraction:
    """Exact ``λ(⋃_{n=N}^M {x : |T^n x - h| < psi(n)})`` for integer base b and constant h.

    With ``U_n`` the set of ``y = T^n x`` avoiding every target from n on,
    ``F_n(a) = λ(U_n ∩ [0, a))`` obeys a digit recursion whose query points
    stay few, so everything is computed in rationals.
    """
    h = _frac(h)
    targets = {n: _target(h, _frac(psi(n))) for n in range(N, M + 1)}

    @lru_cache(maxsize=None)
    def F(n: int, a: Fraction) -> Fraction:
        if a <= 0:
            return Fraction(0)
        if n > M:
            return min(a, Fraction(1))
        lo, hi = targets[n]
        total = Fraction(0)
        for j in range(b):
            c = min(max(b * a - j, Fraction(0)), Fraction(1))
            if c == 0:
                break
            p = min(max(b * lo - j, Fraction(0)), Fraction(1))
            q = min(max(b * hi - j, Fraction(0)), Fraction(1))
            val = F(n + 1, c)
            if p < q:
                val -= F(n + 1, min(c, q)) - F(n + 1, min(c, p))
            total += val
        return total / b

    import sys

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * (M - N) + 1000))
    try:
        # evaluate from the deep end first to keep recursion shallow
        for n in range(M, N - 1, -1):
            F(n, Fraction(1))
        return 1 - F(N, Fraction(1))
    finally:
        sys.setrecursionlimit(limit)


def pair_measure(b: int, A: tuple, B: tuple, gap: int) -> Fraction:
    """Exact ``λ(A ∩ T^-gap B)`` for intervals A, B of [0, 1) and integer base b."""
    a0, a1 = A
    b0, b1 = B
    if a1 <= a0 or b1 <= b0:
        return Fraction(0)
    if gap == 0:
        return max(Fraction(0), min(a1, b1) - max(a0, b0))
    scale = Fraction(1, b ** gap)
    width = (b1 - b0) * scale

    def upto(x: Fraction) -> Fraction:
        # λ([0, x) ∩ T^-gap B)
        k = math.floor(x / scale)
        rest = x - k * scale
        part = min(max(rest - b0 * scale, Fraction(0)), width)
        return k * width + part

    return upto(a1) - upto(a0)


def chung_erdos_lower(unions: Sequence[IntervalUnion], window=(0, 1)) -> float:
    """``(Σ λ(A_n ∩ W))² / Σ_{n,m} λ(A_n ∩ A_m ∩ W)`` for explicit interval unions."""
    W = IntervalUnion.from_intervals([window])
    parts = [u.intersect(W) for u in unions]
    num = sum(float(p.measure) for p in parts)
    den = 0.0
    for i, p in enumerate(parts):
        den += float(p.measure)
        for q in parts[i + 1:]:
            den += 2 * float(p.intersect(q).measure)
    if den == 0:
        return 0.0
    return num * num / den


def chung_erdos_lattice(b: int, h, psi: Callable[[int], Fraction], N: int, M: int, window_word: Sequence[int]):
    """Chung–Erdős bound on a level-k cylinder window for integer base, exact in rationals.

    Needs ``k <= N``: the window then fixes only digits the targets ignore,
    so every measure factors as ``|W|`` times a lattice measure.
    """
    k = len(window_word)
    if k > N:
        raise PreconditionError("window level must not exceed N")
    W = Fraction(1, b ** k)
    h = _frac(h)
    targets = [_target(h, _frac(psi(n))) for n in range(N, M + 1)]
    singles = [W * (t[1] - t[0]) for t in targets]
    num = sum(singles)
    den = sum(singles)
    for i in range(len(targets)):
        for j in range(i + 1, len(targets)):
            den += 2 * W * pair_measure(b, targets[i], targets[j], j - i)
    bound = num * num / den if den else Fraction(0)
    return {"bound": bound, "window": W, "ratio": float(bound / W), "sum": num, "pairs": den}


def region_union_1d(beta, h: LipschitzMap, psi: ApproxFunction, N: int, M: int, full_only: bool = False,
                    window=None) -> IntervalUnion:
    """Explicit union of exact hit sets over levels N..M (small levels only)."""
    beta = Beta.parse(beta) if not isinstance(beta, Beta) else beta
    psi = ApproxFunction.parse(psi)
    pieces = []
    from .beta_core import enumerate_cylinders

    for n in range(N, M + 1):
        r = mpmath.mpf(min(psi.value(n), 1.0))
        cyls = enumerate_full(beta, n, window) if full_only else enumerate_cylinders(beta, n)
        for cyl in cyls:
            if r >= 1:
                lo, hi = cyl.left, cyl.right
            else:
                lo, hi = hit_interval(cyl, h, r)
            if hi > lo:
                pieces.append((lo, hi))
    return IntervalUnion.from_intervals(pieces)


def tilde_band(beta, word: Sequence[int], n_values: Sequence[int], psi, h: LipschitzMap) -> list:
    """``λ(I ∩ Ẽ_n) / (|I| psi(n))`` for a full cylinder I and each n, via explicit hit sets."""
    beta = Beta.parse(beta) if not isinstance(beta, Beta) else beta
    psi = ApproxFunction.parse(psi)
    I = cylinder(tuple(word), beta)
    if not I.is_full:
        raise PreconditionError("window cylinder must be full")
    out = []
    for n in n_values:
        r = mpmath.mpf(psi.value(n))
        total = mpmath.mpf(0)
        for cyl in enumerate_full(beta, n, (I.left, I.right)):
            if cyl.word[: len(word)] != tuple(word):
                continue
            lo, hi = hit_interval(cyl, h, r)
            total += max(hi - lo, 0)
        out.append(float(total / (I.length * r)))
    return out


# ------------------------------------------------------------ f-content

def fcontent_upper(region, f: DimensionFunction, tau_grid=None) -> dict:
    """Upper bound on the f-content: best single-scale grid cover or a single enclosing ball."""
    if isinstance(region, RectFamily):
        unions = [IntervalUnion.from_intervals(axis) for axis in region.axes]
    elif isinstance(region, HitRegion):
        if region.mode != "weighted":
            raise UnsupportedError("f-content bounds need a weighted region")
        unions = [region.axis_union(i, "exact") for i in range(region.d)]
    else:
        unions = [u if isinstance(u, IntervalUnion) else IntervalUnion.from_intervals(u) for u in region]
    if any(not u for u in unions):
        return {"bound": 0.0, "method": "empty"}
    with mpmath.workprec(256):
        spans = [u.parts[-1][1] - u.parts[0][0] for u in unions]
        diam = max(mpmath.mpf(s) for s in spans)
        candidates = []
        if 0 < diam <= mpmath.exp(-1):
            candidates.append((float(mpmath.exp(f.log_eval(mpmath.log(diam)))), "single_ball", float(diam)))
        if tau_grid is None:
            lo = min(mpmath.mpf(p[1] - p[0]) for u in unions for p in u.parts)
            hi = min(diam, mpmath.exp(-1))
            k = 24
            tau_grid = [lo * (hi / lo) ** (mpmath.mpf(i) / k) for i in range(k + 1)] if hi > lo else [lo]
            tau_grid = [t for t in tau_grid if t <= mpmath.exp(-1)]
        if tau_grid:
            cover = brute_force_fcover_unions(unions, f, tau_grid)
            candidates.append((cover.f_volume, "grid", cover.cell))
    if not candidates:
        raise DomainError("region too large for the dimension function's domain")
    best = min(candidates)
    return {"bound": best[0], "method": best[1], "scale": best[2]}


def mdp_lower(mu: MuMeasure, f: DimensionFunction, samples: int = 10_000, seed: int = 0,
              min_hits: int = 100) -> dict:
    """``1 / c`` with ``c`` the sampled sup of ``mu(B) / f(|B|)``, ``|B| = 2r`` (side of the square ball)."""
    fam = mu.family
    rng = np.random.default_rng(seed)
    with mpmath.workprec(fam.prec):
        lengths = [hi - lo for axis in fam.axes for lo, hi in axis]
        log_lo = mpmath.log(min(lengths)) - 4
        log_hi = mpmath.log(mpmath.exp(-1) / 2)
        if log_hi <= log_lo:
            raise DomainError("no radii inside the dimension function's domain")
        best = -mpmath.inf
        hits = 0
        for _ in range(samples):
            log_r = log_lo + (log_hi - log_lo) * mpmath.mpf(rng.random())
            x = []
            for axis in fam.axes:
                lo, hi = axis[int(rng.integers(len(axis)))]
                x.append(lo + (hi - lo) * mpmath.mpf(rng.random()))
            mass = mu_ball(mu, x, mpmath.exp(log_r))
            if mass <= 0:
                continue
            hits += 1
            val = mpmath.log(mass) - f.log_eval(log_r + mpmath.log(2))
            best = max(best, val)
        if hits < min_hits:
            raise DomainError(f"only {hits} sampled balls carried mass; increase samples")
        c = mpmath.exp(best)
    return {"c": float(c), "log_c": float(best), "bound": float(1 / c), "log_bound": float(-best),
            "samples": samples, "balls_with_mass": hits}


def single_interval_measure(left, right) -> MuMeasure:
    """Uniform probability on one interval, as a degenerate rectangle family."""
    with mpmath.workprec(128):
        lo, hi = mpmath.mpf(left), mpmath.mpf(right)
    fam = RectFamily(frame=None, y=((lo + hi) / 2,), axes=[[(lo, hi)]], prec=128)
    return MuMeasure(fam)
