"""Upper-bound coverings: per-scale cover counts, grid-cover oracle, hyperboloid covers.

Balls are taken in the max norm, so a ball is an open square (cube) and
its diameter ``|B|`` is the side length.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import mpmath
import numpy as np
import sympy
from scipy.spatial import cKDTree

from .beta_core import BetaVector
from .dimension import DimensionFunction
from .errors import DomainError, ResourceError, UnsupportedError
from .hitset import HitRegion
from .intervals import IntervalUnion
from .series import ApproxFunction, parse_psi_tuple

CELL_CAP = 10_000_000


@dataclass(frozen=True)
class CoverEstimate:
    n: int
    tau: float
    count: float
    f_volume: float
    K1: tuple
    K2: tuple
    neither: tuple

    def to_dict(self) -> dict:
        return {"n": self.n, "tau": self.tau, "count": self.count, "f_volume": self.f_volume,
                "K1": [i + 1 for i in self.K1], "K2": [i + 1 for i in self.K2],
                "neither": [i + 1 for i in self.neither]}


def _psi_mp(psi: ApproxFunction, n: int) -> mpmath.mpf:
    a0, a1, a2, q = (mpmath.mpf(str(sympy.N(c, 40))) for c in (psi.a0, psi.a1, psi.a2, psi.q))
    return mpmath.exp(a0 + a1 * n + a2 * n * n) * mpmath.mpf(n) ** q


def cover_count(betas, Psi, f: DimensionFunction, n: int, tau) -> CoverEstimate:
    """Number of tau-balls needed for the level-n rectangles, with constants suppressed.

    Axis i with ``beta_i^-n <= tau`` (cylinders finer than tau) costs
    ``1/tau`` balls in total; axis i with ``beta_i^-n psi_i(n) >= tau``
    (targets wider than tau) costs ``psi_i(n)/tau`` per cylinder; any other
    axis costs one ball per cylinder.
    """
    betas = BetaVector.parse(betas)
    Psi = parse_psi_tuple(Psi, betas.d)
    with mpmath.workdps(40):
        tau = mpmath.mpf(tau)
        if not 0 < tau < 1:
            raise DomainError("tau must lie in (0, 1)")
        count = mpmath.mpf(1)
        K1, K2, neither = [], [], []
        slack = mpmath.mpf(10) ** -30
        for i, (beta, psi) in enumerate(zip(betas, Psi)):
            side = mpmath.mpf(beta.value) ** -n
            target = side * _psi_mp(psi, n)
            per_axis = 1 / side
            if side <= tau * (1 + slack):
                per_axis *= side / tau
                K1.append(i)
            if target >= tau * (1 - slack):
                per_axis *= target / tau
                K2.append(i)
            if i not in K1 and i not in K2:
                neither.append(i)
            count *= per_axis
        log_f = f.log_eval(mpmath.log(tau))
        fv = count * mpmath.exp(log_f)
        return CoverEstimate(n, float(tau), float(count), float(fv), tuple(K1), tuple(K2), tuple(neither))


@dataclass
class BallCover:
    """Union of max-norm balls.

    Grid covers of product sets keep, per axis, runs ``(k0, k1)`` of cell
    indices instead of explicit balls.
    """

    centers: Optional[np.ndarray] = None
    radii: Optional[np.ndarray] = None
    axis_cells: Optional[list] = None
    cell: Optional[float] = None
    s_volume: Optional[float] = None
    f_volume: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        if self.axis_cells is not None:
            return math.prod(_cell_count(runs) for runs in self.axis_cells)
        return 0 if self.centers is None else len(self.centers)

    def iter_balls(self, cap: int = CELL_CAP) -> Iterator[tuple]:
        if self.axis_cells is not None:
            if self.count > cap:
                raise ResourceError(f"{self.count} cells exceed the cap {cap}")
            half = self.cell / 2
            axes = [np.concatenate([np.arange(k0, k1 + 1) for k0, k1 in runs]) if runs else np.array([])
                    for runs in self.axis_cells]
            grids = np.meshgrid(*[(ax.astype(float) + 0.5) * self.cell for ax in axes], indexing="ij")
            for pt in zip(*(g.ravel() for g in grids)):
                yield tuple(pt), half
        elif self.centers is not None:
            for c, r in zip(self.centers, self.radii):
                yield tuple(c), float(r)

    def to_csv(self, cap: int = CELL_CAP) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cx", "cy", "radius"])
        for c, r in self.iter_balls(cap):
            w.writerow([repr(float(c[0])), repr(float(c[1])) if len(c) > 1 else "", repr(float(r))])
        return buf.getvalue()

    def covers(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask: which points lie in some ball (open max-norm balls)."""
        points = np.atleast_2d(points)
        inside = np.zeros(len(points), dtype=bool)
        if self.axis_cells is not None:
            inside[:] = True
            for axis, runs in enumerate(self.axis_cells):
                if not runs:
                    inside[:] = False
                    break
                k = np.floor(points[:, axis] / self.cell)
                starts = np.array([r[0] for r in runs], dtype=float)
                ends = np.array([r[1] for r in runs], dtype=float)
                pos = np.searchsorted(starts, k, side="right") - 1
                ok = pos >= 0
                inside &= ok & (k <= ends[np.maximum(pos, 0)])
            return inside
        for r in np.unique(self.radii):
            sel = self.radii == r
            tree = cKDTree(self.centers[sel])
            dist, _ = tree.query(points, k=1, p=np.inf, distance_upper_bound=r)
            inside |= dist < r
        return inside


def _cells_meeting(union: IntervalUnion, tau) -> list:
    """Runs ``(k0, k1)`` of cell indices k, cells ``[k tau, (k+1) tau)``, meeting the union."""
    runs: list = []
    for lo, hi in union:
        lo, hi = max(lo, 0), min(hi, 1)
        if hi <= lo:
            continue
        k0 = int(mpmath.floor(lo / tau))
        k1 = int(mpmath.ceil(hi / tau)) - 1
        if runs and k0 <= runs[-1][1] + 1:
            runs[-1] = (runs[-1][0], max(runs[-1][1], k1))
        elif k1 >= k0:
            runs.append((k0, k1))
    return runs


def _cell_count(runs: list) -> int:
    return sum(k1 - k0 + 1 for k0, k1 in runs)


def brute_force_fcover_unions(unions: Sequence[IntervalUnion], f: DimensionFunction, tau_grid) -> BallCover:
    """Grid covers of a product of per-axis interval unions; best f-volume over the grid."""
    if any(not u for u in unions):
        return BallCover(axis_cells=[[] for _ in unions], cell=float(max(tau_grid)), f_volume=0.0,
                         meta={"per_tau": []})
    best = None
    per_tau = []
    with mpmath.workprec(160):
        for tau in tau_grid:
            tau = mpmath.mpf(tau)
            runs = [_cells_meeting(u, tau) for u in unions]
            count = math.prod(_cell_count(r) for r in runs)
            fv = count * mpmath.exp(f.log_eval(mpmath.log(tau)))
            per_tau.append({"tau": float(tau), "cells": count, "f_volume": float(fv)})
            if best is None or fv < best[0]:
                best = (fv, tau, runs, count)
    fv, tau, runs, count = best
    return BallCover(axis_cells=runs, cell=float(tau), f_volume=float(fv),
                     meta={"per_tau": per_tau, "best_tau": float(tau), "cells": count})


def brute_force_fcover(region: HitRegion, f: DimensionFunction, tau_grid=None) -> BallCover:
    """Oracle upper bound for the f-content of a weighted region at level n.

    A weighted region is a product of per-axis unions of exact hit
    intervals, so the tau-cells meeting it are products of per-axis cells
    and are counted axis by axis.
    """
    if region.mode != "weighted":
        raise UnsupportedError("grid covers need a weighted region")
    if region.d > 2:
        raise UnsupportedError("grid covers are supported for d <= 2")
    if tau_grid is None:
        tau_grid = default_tau_grid(region)
    unions = [region.axis_union(i, "exact") for i in range(region.d)]
    return brute_force_fcover_unions(unions, f, tau_grid)


def default_tau_grid(region: HitRegion) -> list:
    """The scales of A_n for the region's level."""
    out = []
    for beta, r in zip(region.betas, region.rates):
        side = beta.power(region.n) ** -1
        out.extend([float(side), float(side * r)])
    return sorted(set(t for t in out if 0 < t <= math.exp(-1)))


# ------------------------------------------------------------- hyperboloid

def _hyperboloid_tiles(a, delta: float) -> tuple[int, list]:
    """Rectangles ``(xlo, xhi, ylo, yhi, side)`` of the dyadic construction, with tile counts."""
    a = tuple(float(v) for v in a)
    if len(a) != 2:
        raise UnsupportedError("hyperboloid covers are implemented for d = 2")
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    a1, a2 = a
    K = int(math.floor(math.log2(1 / delta) + 1e-12))
    rects = []
    for k in range(K):
        A = 2.0 ** (-k - 1)
        B = delta * 2.0 ** (k + 1)
        side = min(A, 2 * B)
        ylo, yhi = max(0.0, a2 - B), min(1.0, a2 + B)
        for xlo, xhi in ((a1 - 2 * A, a1 - A), (a1 + A, a1 + 2 * A)):
            xlo, xhi = max(0.0, xlo), min(1.0, xhi)
            if xhi > xlo and yhi > ylo:
                rects.append((xlo, xhi, ylo, yhi, side))
    core = 2.0 ** -K
    xlo, xhi = max(0.0, a1 - core), min(1.0, a1 + core)
    if xhi > xlo:
        rects.append((xlo, xhi, 0.0, 1.0, core))
    tiles = []
    for xlo, xhi, ylo, yhi, side in rects:
        nx = max(1, math.ceil((xhi - xlo) / side - 1e-12))
        ny = max(1, math.ceil((yhi - ylo) / side - 1e-12))
        tiles.append((xlo, ylo, side, nx, ny))
    return K, tiles


def hyperboloid_s_volume(a, delta: float, s: float) -> float:
    """``sum |B|^s`` of :func:`hyperboloid_cover` without building the balls."""
    K, tiles = _hyperboloid_tiles(a, delta)
    if K == 0:
        return 1.0
    return float(sum(nx * ny * side ** s for _, _, side, nx, ny in tiles))


def hyperboloid_cover(a, delta: float, s: float) -> BallCover:
    """Cover of ``{x in [0,1]^2 : |x1 - a1| |x2 - a2| < delta}`` by squares of side >= delta.

    Dyadic slabs ``|x1 - a1| in [2^-k-1, 2^-k)`` for ``k < K = floor(log2(1/delta))``
    have ``|x2 - a2| < delta 2^(k+1)`` and are tiled by squares of side
    ``min(2^-k-1, delta 2^(k+2))``; the core ``|x1 - a1| < 2^-K`` is tiled
    by squares of side ``2^-K``.  For ``delta > 1/2`` there are no slabs and
    a single unit square is returned.
    """
    if not 1 < s < 2:
        raise DomainError("s must lie in (d-1, d) = (1, 2)")
    K, tiles = _hyperboloid_tiles(a, delta)
    if K == 0:
        centers = np.array([[0.5, 0.5]])
        radii = np.array([0.5 + 1e-12])
    else:
        centers, radii = [], []
        for xlo, ylo, side, nx, ny in tiles:
            gx, gy = np.meshgrid(xlo + (np.arange(nx) + 0.5) * side, ylo + (np.arange(ny) + 0.5) * side,
                                 indexing="ij")
            centers.append(np.column_stack([gx.ravel(), gy.ravel()]))
            radii.append(np.full(nx * ny, side / 2))
        centers = np.vstack(centers)
        radii = np.concatenate(radii)
    s_vol = float(np.sum(np.minimum(2 * radii, 1.0) ** s))
    C = s_vol / delta ** (s - 1)
    return BallCover(centers=centers, radii=radii, s_volume=s_vol,
                     meta={"a": tuple(float(v) for v in a), "delta": delta, "s": s, "K": K, "C": C,
                           "balls": len(radii), "min_diameter": float(2 * radii.min())})


def sample_hyperboloid(a, delta: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Points of the hyperboloid neighbourhood: half by rejection, half along the arms.

    The second half draws x1 uniformly and x2 uniformly in the allowed
    band, which reaches deep into the thin arms where rejection rarely lands.
    """
    a1, a2 = (float(v) for v in a)
    half = size // 2
    out = []
    got = 0
    while got < half:
        pts = rng.random((max(4 * half, 10_000), 2))
        keep = pts[np.abs(pts[:, 0] - a1) * np.abs(pts[:, 1] - a2) < delta]
        out.append(keep[: half - got])
        got += len(out[-1])
    m = size - half
    x1 = rng.random(m)
    w = delta / np.maximum(np.abs(x1 - a1), 1e-300)
    lo = np.maximum(0.0, a2 - w)
    hi = np.minimum(1.0, a2 + w)
    x2 = lo + (hi - lo) * rng.random(m)
    arms = np.column_stack([x1, x2])
    arms = arms[np.abs(arms[:, 0] - a1) * np.abs(arms[:, 1] - a2) < delta]
    return np.vstack(out + [arms])


def scaling_slope(deltas: Sequence[float], s: float, a=(0.0, 0.0)) -> tuple[float, list]:
    """Least-squares slope of ``log sum |B|^s`` against ``log delta``."""
    vols = [hyperboloid_s_volume(a, d, s) for d in deltas]
    slope = float(np.polyfit(np.log(deltas), np.log(vols), 1)[0])
    return slope, vols
