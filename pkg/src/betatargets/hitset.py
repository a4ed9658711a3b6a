"""Hit sets of a single cylinder: anchors, ball enclosures, product regions.

On a level-n cylinder with left endpoint ``c`` the map ``T^n`` is the
affine map ``G(x) = beta**n (x - c)``.  Since ``G - h`` has slope at
least ``beta**n - L > 0`` it has a unique zero ``z`` (the anchor) on the
closed interval ``[c, c + beta**-n]`` and the hit set
``{x in I : |T^n x - h(x)| < r}`` is an interval around ``z``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from .beta_core import Beta, BetaVector, Cylinder, _to_mpf, beta_digits, cylinder, enumerate_cylinders
from .errors import DomainError, PreconditionError, UnsupportedError
from .intervals import IntervalUnion


@dataclass(frozen=True)
class LipschitzMap:
    """Target map ``h : [0,1) -> [0,1)`` with a Lipschitz bound."""

    kind: str
    params: tuple = ()
    lipschitz_bound: float = 0.0

    @classmethod
    def constant(cls, a) -> "LipschitzMap":
        a = mpmath.mpf(a) if not isinstance(a, str) else _to_mpf(a, 128)
        if not 0 <= a < 1:
            raise DomainError("constant target must lie in [0, 1)")
        return cls("constant", (a,), 0.0)

    @classmethod
    def identity(cls) -> "LipschitzMap":
        return cls("identity", (), 1.0)

    @classmethod
    def affine(cls, slope, offset) -> "LipschitzMap":
        slope, offset = (_to_mpf(v, 128) if isinstance(v, str) else mpmath.mpf(v) for v in (slope, offset))
        ends = (offset, slope + offset)
        if not (0 <= min(ends) and max(ends) <= 1 and offset < 1):
            raise DomainError("affine target must map [0, 1) into [0, 1)")
        return cls("affine", (slope, offset), float(abs(slope)))

    @classmethod
    def tabulated(cls, xs: Sequence[float], ys: Sequence[float], lipschitz_bound: float) -> "LipschitzMap":
        """Piecewise-linear interpolation of samples; the bound is checked, never inferred."""
        xs = tuple(float(x) for x in xs)
        ys = tuple(float(y) for y in ys)
        if len(xs) != len(ys) or len(xs) < 2:
            raise DomainError("need at least two samples of equal length")
        if xs[0] != 0.0 or xs[-1] != 1.0 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("sample abscissae must increase from 0 to 1")
        if any(not 0 <= y < 1 for y in ys):
            raise DomainError("sample values must lie in [0, 1)")
        slopes = np.abs(np.diff(ys) / np.diff(xs))
        if slopes.max() > lipschitz_bound * (1 + 1e-12):
            raise DomainError(f"samples have slope {slopes.max():.6g} above the certified bound {lipschitz_bound}")
        return cls("tabulated", (xs, ys), float(lipschitz_bound))

    @classmethod
    def from_spec(cls, spec) -> "LipschitzMap":
        """A map from config form: a dict, ``"identity"``, or a constant."""
        if isinstance(spec, dict):
            return cls.from_dict(spec)
        if spec == "identity":
            return cls.identity()
        return cls.constant(str(spec))

    @classmethod
    def from_dict(cls, data: dict) -> "LipschitzMap":
        kind = data.get("kind", "constant")
        if kind == "constant":
            return cls.constant(data.get("value", data.get("a", 0)))
        if kind == "identity":
            return cls.identity()
        if kind == "affine":
            return cls.affine(data["slope"], data["offset"])
        if kind == "tabulated":
            return cls.tabulated(data["xs"], data["ys"], data["lipschitz_bound"])
        raise DomainError(f"unknown map kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": float(self.params[0])}
        if self.kind == "identity":
            return {"kind": "identity"}
        if self.kind == "affine":
            return {"kind": "affine", "slope": float(self.params[0]), "offset": float(self.params[1])}
        return {"kind": "tabulated", "xs": list(self.params[0]), "ys": list(self.params[1]),
                "lipschitz_bound": self.lipschitz_bound}

    def __call__(self, x):
        if self.kind == "constant":
            if isinstance(x, np.ndarray):
                return np.full(x.shape, float(self.params[0]))
            return self.params[0]
        if self.kind == "identity":
            return x
        if self.kind == "affine":
            slope, offset = self.params
            if isinstance(x, np.ndarray):
                return float(slope) * x + float(offset)
            return slope * x + offset
        xs, ys = self.params
        if isinstance(x, np.ndarray):
            return np.interp(x, xs, ys)
        i = min(max(np.searchsorted(xs, float(x), side="right") - 1, 0), len(xs) - 2)
        t = (x - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + t * (ys[i + 1] - ys[i])


def _check_lipschitz(beta: Beta, n: int, h: LipschitzMap) -> mpmath.mpf:
    B = beta.power(n)
    if h.lipschitz_bound >= B:
        raise PreconditionError(
            f"Lipschitz bound {h.lipschitz_bound} must be below beta^n = {mpmath.nstr(B, 8)}"
        )
    return B


def solve_anchor(cyl: Cylinder, h: LipschitzMap) -> mpmath.mpf:
    """Unique z in ``[left, left + beta**-n]`` with ``beta**n (z - left) = h(z)``."""
    beta = cyl.beta
    with mpmath.workprec(beta.precision_bits):
        B = _check_lipschitz(beta, cyl.n, h)
        left = cyl.left
        if h.kind == "constant":
            return left + h.params[0] / B
        if h.kind == "identity":
            return B * left / (B - 1)
        if h.kind == "affine":
            slope, offset = h.params
            return (B * left + offset) / (B - slope)
        lo, hi = left, left + 1 / B
        tol = mpmath.ldexp(1, -(beta.precision_bits // 2))
        for _ in range(beta.precision_bits):
            if hi - lo <= tol:
                break
            mid = (lo + hi) / 2
            if B * (mid - left) - h(mid) < 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def _solve_level(cyl: Cylinder, h: LipschitzMap, level) -> mpmath.mpf:
    """Point x (possibly outside the cylinder) with ``G(x) - h(x) = level``."""
    beta = cyl.beta
    with mpmath.workprec(beta.precision_bits):
        B = beta.power(cyl.n)
        left = cyl.left
        if h.kind == "constant":
            return left + (h.params[0] + level) / B
        if h.kind == "identity":
            return (B * left + level) / (B - 1)
        if h.kind == "affine":
            slope, offset = h.params
            return (B * left + offset + level) / (B - slope)
        # G - h is increasing with slope >= B - L; bracket and bisect
        z = solve_anchor(cyl, h)
        width = abs(level) / (B - h.lipschitz_bound) + mpmath.ldexp(1, -beta.precision_bits // 2)
        lo, hi = (z, z + width) if level >= 0 else (z - width, z)
        hmap = _extended(h)
        tol = mpmath.ldexp(1, -(beta.precision_bits // 2))
        for _ in range(beta.precision_bits):
            if hi - lo <= tol:
                break
            mid = (lo + hi) / 2
            if B * (mid - left) - hmap(mid) < level:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def _extended(h: LipschitzMap) -> Callable:
    """h extended to the real line by clamping the argument to [0, 1]."""
    def ext(x):
        return h(min(max(x, mpmath.mpf(0)), mpmath.mpf(1)))
    return ext


@dataclass(frozen=True)
class Ball:
    center: mpmath.mpf
    radius: mpmath.mpf

    def contains(self, x) -> bool:
        return abs(x - self.center) < self.radius

    @property
    def interval(self) -> tuple:
        return (self.center - self.radius, self.center + self.radius)


@dataclass(frozen=True)
class HitEnclosure:
    cylinder: Cylinder
    center: mpmath.mpf
    outer: Ball
    inner: Optional[Ball]
    boundary_anchor: bool

    def inner_interval(self) -> Optional[tuple]:
        """Inner ball intersected with the cylinder."""
        if self.inner is None:
            return None
        lo, hi = self.inner.interval
        return (max(lo, self.cylinder.left), min(hi, self.cylinder.right))


def hit_enclosures(cyl: Cylinder, h: LipschitzMap, r) -> HitEnclosure:
    """Outer ball containing the hit set and, for full cylinders, an inner ball inside it.

    The outer radius is ``2 r beta**-n``, enlarged to ``r / (beta**n - L)``
    when ``L > beta**n / 2`` (the smaller radius is only valid for
    ``L <= beta**n / 2``).
    """
    beta = cyl.beta
    with mpmath.workprec(beta.precision_bits):
        r = _to_mpf(r, beta.precision_bits)
        if not 0 < r < 1:
            raise DomainError("r must lie in (0, 1)")
        B = _check_lipschitz(beta, cyl.n, h)
        z = solve_anchor(cyl, h)
        outer_r = max(2 * r / B, r / (B - mpmath.mpf(h.lipschitz_bound)))
        inner = Ball(z, r / (2 * B)) if cyl.is_full else None
        return HitEnclosure(cyl, z, Ball(z, outer_r), inner, z >= cyl.right)


def hit_interval(cyl: Cylinder, h: LipschitzMap, r) -> tuple:
    """Exact hit set ``{x in I : |T^n x - h(x)| < r}`` as a (possibly empty) interval."""
    beta = cyl.beta
    with mpmath.workprec(beta.precision_bits):
        r = _to_mpf(r, beta.precision_bits)
        _check_lipschitz(beta, cyl.n, h)
        lo = max(_solve_level(cyl, h, -r), cyl.left)
        hi = min(_solve_level(cyl, h, r), cyl.right)
        if hi <= lo:
            return (cyl.left, cyl.left)
        return (lo, hi)


def t_power(x, beta: Beta, n: int) -> mpmath.mpf:
    """``T^n x`` by iterating the map at working precision."""
    with mpmath.workprec(beta.precision_bits):
        t = _to_mpf(x, beta.precision_bits)
        for _ in range(n):
            t = beta.value * t
            t -= mpmath.floor(t)
        return t


@dataclass(frozen=True)
class AxisBall:
    word: tuple
    left: mpmath.mpf
    right: mpmath.mpf
    center: mpmath.mpf
    inner_radius: Optional[mpmath.mpf]
    outer_radius: mpmath.mpf
    boundary_anchor: bool = False

    def inner_interval(self) -> Optional[tuple]:
        if self.inner_radius is None:
            return None
        return (max(self.center - self.inner_radius, self.left), min(self.center + self.inner_radius, self.right))

    def outer_interval(self) -> tuple:
        return (self.center - self.outer_radius, self.center + self.outer_radius)

    def to_dict(self) -> dict:
        return {
            "word": list(self.word),
            "center": float(self.center),
            "inner_radius": None if self.inner_radius is None else float(self.inner_radius),
            "outer_radius": float(self.outer_radius),
            "boundary_anchor": self.boundary_anchor,
        }


@dataclass(frozen=True)
class AxisAnchor:
    word: tuple
    left: mpmath.mpf
    right: mpmath.mpf
    z: mpmath.mpf
    a: mpmath.mpf


@dataclass
class HitRegion:
    """Target region at one level n, in weighted or multiplicative mode."""

    d: int
    mode: str
    n: int
    betas: BetaVector
    maps: tuple
    rates: tuple
    axes: list = field(default_factory=list)
    anchors: list = field(default_factory=list)
    delta: Optional[float] = None

    def axis_union(self, axis: int = 0, which: str = "inner") -> IntervalUnion:
        if self.mode != "weighted":
            raise UnsupportedError("interval unions exist only for weighted regions")
        balls = self.axes[axis]
        if which == "inner":
            ivs = [b.inner_interval() for b in balls if b.inner_radius is not None]
        elif which == "outer":
            ivs = [b.outer_interval() for b in balls]
        elif which == "exact":
            beta = self.betas[axis]
            ivs = [hit_interval(cylinder(b.word, beta), self.maps[axis], self.rates[axis]) for b in balls]
        else:
            raise DomainError(f"unknown interval kind {which!r}")
        return IntervalUnion.from_intervals(ivs)

    def _locate(self, axis: int, x) -> AxisAnchor:
        beta = self.betas[axis]
        word = beta_digits(x, beta, self.n).digits
        for anc in self.anchors[axis]:
            if anc.word == word:
                return anc
        raise DomainError(f"no anchor for word {word}")

    def contains(self, x: Sequence) -> bool:
        """Membership ``prod |T^n x_i - h_i(x_i)| < psi(n)`` (multiplicative mode)."""
        if self.mode != "multiplicative":
            raise UnsupportedError("membership predicate is defined for multiplicative regions")
        prod = mpmath.mpf(1)
        for i, xi in enumerate(x):
            anc = self._locate(i, xi)
            B = self.betas[i].power(self.n)
            prod *= abs(B * (xi - anc.left) - self.maps[i](mpmath.mpf(xi)))
        return prod < self.rates[0]

    def pullback_value(self, x: Sequence) -> mpmath.mpf:
        """``prod |G_i(x_i) - a_i|`` for the cylinder product containing x."""
        prod = mpmath.mpf(1)
        for i, xi in enumerate(x):
            anc = self._locate(i, xi)
            B = self.betas[i].power(self.n)
            prod *= abs(B * (xi - anc.left) - anc.a)
        return prod

    def pullback_contains(self, x: Sequence) -> bool:
        return self.pullback_value(x) < self.delta

    def to_dict(self) -> dict:
        out = {
            "d": self.d, "mode": self.mode, "n": self.n,
            "betas": [str(b.expr) for b in self.betas],
            "maps": [m.to_dict() for m in self.maps],
            "rates": [float(r) for r in self.rates],
        }
        if self.mode == "weighted":
            out["axes"] = [[b.to_dict() for b in axis] for axis in self.axes]
        else:
            out["delta"] = float(self.delta)
            out["anchors"] = [
                [{"word": list(a.word), "z": float(a.z), "a": float(a.a)} for a in axis] for axis in self.anchors
            ]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _rate_value(rate, n: int):
    if callable(rate):
        return rate(n)
    if hasattr(rate, "value"):
        return rate.value(n)
    return rate


def build_hit_region(betas, rates, maps, n: int, mode: str = "weighted") -> HitRegion:
    """Target region at level n.

    ``rates`` is a tuple of per-axis rates (weighted) or a single rate
    (multiplicative); each rate is a number or a callable of n.
    """
    betas = BetaVector.parse(betas)
    d = betas.d
    if isinstance(maps, LipschitzMap):
        maps = (maps,) * d
    maps = tuple(maps)
    if len(maps) != d:
        raise DomainError("need one map per axis")
    if mode == "weighted":
        if not isinstance(rates, (list, tuple)):
            rates = (rates,) * d
        if len(rates) != d:
            raise DomainError("need one rate per axis")
        values = tuple(mpmath.mpf(_rate_value(r, n)) for r in rates)
        axes = []
        for beta, h, r in zip(betas, maps, values):
            with mpmath.workprec(beta.precision_bits):
                B = _check_lipschitz(beta, n, h)
                balls = []
                for cyl in enumerate_cylinders(beta, n):
                    z = solve_anchor(cyl, h)
                    outer = max(2 * r / B, r / (B - mpmath.mpf(h.lipschitz_bound)))
                    inner = r / (2 * B) if cyl.is_full else None
                    balls.append(AxisBall(cyl.word, cyl.left, cyl.right, z, inner, outer, z >= cyl.right))
            axes.append(balls)
        return HitRegion(d, mode, n, betas, maps, values, axes=axes)
    if mode == "multiplicative":
        psi = mpmath.mpf(_rate_value(rates, n))
        Lmax = max(h.lipschitz_bound for h in maps)
        Bmin = min(b.power(n) for b in betas)
        if Bmin < 2 * Lmax:
            raise PreconditionError("multiplicative pullback needs min beta_i^n >= 2L")
        anchors = []
        for beta, h in zip(betas, maps):
            axis = []
            for cyl in enumerate_cylinders(beta, n):
                z = solve_anchor(cyl, h)
                axis.append(AxisAnchor(cyl.word, cyl.left, cyl.right, z, h(z)))
            anchors.append(axis)
        return HitRegion(d, mode, n, betas, maps, (psi,), anchors=anchors, delta=2 ** d * psi)
    raise DomainError(f"unknown mode {mode!r}")


def region_measure_1d(region: HitRegion, axis: int = 0, which: str = "inner"):
    """Lebesgue measure of one axis of a weighted region (inner balls clipped to their cylinders)."""
    if region.mode != "weighted":
        raise UnsupportedError("region_measure_1d needs a weighted region")
    return region.axis_union(axis, which).measure
