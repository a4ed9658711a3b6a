"""Beta-expansions, admissible words and cylinder enumeration.

Cylinders are built by recursive interval subdivision.  A level-n
cylinder is stored together with its *image*, the normalised length
``|I| * beta**n`` in (0, 1]; the image equals 1 exactly for full
cylinders, and the children of a cylinder depend only on its image.
That makes counting by dynamic programming over images cheap even when
explicit enumeration is not.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import mpmath
import sympy

from .errors import DomainError, IndeterminateError, PreconditionError, ResourceError
from .exact import to_expr

DEFAULT_PRECISION_BITS = 128
ENUMERATION_CAP = 50_000_000


@dataclass(frozen=True)
class Beta:
    """A real base ``beta > 1`` kept both symbolically and at working precision."""

    expr: sympy.Expr
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self):
        object.__setattr__(self, "expr", to_expr(self.expr))
        if self.precision_bits < 64:
            raise DomainError("precision_bits must be at least 64")
        if not bool(self.expr.is_real) and not self.expr.is_number:
            raise DomainError(f"beta must be a real constant, got {self.expr}")
        if not sympy.N(self.expr, 30) > 1:
            raise DomainError(f"beta must exceed 1, got {self.expr}")

    @classmethod
    def parse(cls, value, precision_bits: int = DEFAULT_PRECISION_BITS) -> "Beta":
        if isinstance(value, Beta):
            return value if value.precision_bits == precision_bits else cls(value.expr, precision_bits)
        return cls(to_expr(value), precision_bits)

    @cached_property
    def value(self) -> mpmath.mpf:
        with mpmath.workprec(self.precision_bits):
            return mpmath.mpf(sympy.N(self.expr, int(self.precision_bits * 0.31) + 10))

    @cached_property
    def is_integer(self) -> bool:
        return bool(self.expr.is_integer)

    @cached_property
    def max_digit(self) -> int:
        """Largest digit, ``ceil(beta - 1)``."""
        return int(sympy.ceiling(self.expr - 1))

    @cached_property
    def log(self) -> float:
        return float(mpmath.log(self.value))

    @property
    def snap_tolerance(self) -> mpmath.mpf:
        return mpmath.ldexp(1, -(self.precision_bits - 24))

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return str(self.expr)

    def power(self, n: int) -> mpmath.mpf:
        with mpmath.workprec(self.precision_bits):
            return self.value ** n


@dataclass(frozen=True)
class BetaVector:
    """Nondecreasing tuple ``1 < beta_1 <= ... <= beta_d``."""

    betas: tuple

    def __post_init__(self):
        if not self.betas:
            raise DomainError("at least one beta is required")
        for a, b in zip(self.betas, self.betas[1:]):
            if sympy.N(b.expr - a.expr, 40) < 0:
                raise DomainError("betas must be nondecreasing")

    @classmethod
    def parse(cls, values, precision_bits: int = DEFAULT_PRECISION_BITS) -> "BetaVector":
        if isinstance(values, BetaVector):
            return values
        if not isinstance(values, (list, tuple)):
            values = [values]
        return cls(tuple(Beta.parse(v, precision_bits) for v in values))

    def __len__(self) -> int:
        return len(self.betas)

    def __iter__(self):
        return iter(self.betas)

    def __getitem__(self, i):
        return self.betas[i]

    @property
    def d(self) -> int:
        return len(self.betas)

    @property
    def all_integer(self) -> bool:
        return all(b.is_integer for b in self.betas)

    def logs(self) -> list[float]:
        return [b.log for b in self.betas]


@dataclass(frozen=True)
class DigitSeq:
    digits: tuple
    beta: Beta

    def __post_init__(self):
        for dgt in self.digits:
            if not 0 <= dgt <= self.beta.max_digit:
                raise DomainError(f"digit {dgt} outside alphabet 0..{self.beta.max_digit}")

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __eq__(self, other):
        if isinstance(other, (tuple, list)):
            return self.digits == tuple(other)
        if isinstance(other, DigitSeq):
            return self.digits == other.digits and self.beta == other.beta
        return NotImplemented

    def __hash__(self):
        return hash(self.digits)

    def value(self) -> mpmath.mpf:
        """Reconstructed value ``sum eps_k beta**-k``."""
        with mpmath.workprec(self.beta.precision_bits):
            total = mpmath.mpf(0)
            inv = 1 / self.beta.value
            scale = inv
            for dgt in self.digits:
                total += dgt * scale
                scale *= inv
            return total


@dataclass(frozen=True)
class Cylinder:
    """Half-open interval ``[left, left + length)`` of an admissible word."""

    word: tuple
    beta: Beta = field(repr=False)
    left: mpmath.mpf
    image: mpmath.mpf
    length_error: mpmath.mpf = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.word)

    @property
    def length(self) -> mpmath.mpf:
        with mpmath.workprec(self.beta.precision_bits):
            return self.image / self.beta.power(self.n)

    @property
    def right(self) -> mpmath.mpf:
        with mpmath.workprec(self.beta.precision_bits):
            return self.left + self.length

    @property
    def is_full(self) -> bool:
        return is_full(self)

    def contains(self, x) -> bool:
        return self.left <= x < self.right

    def as_row(self) -> dict:
        return {
            "word": "".join(map(str, self.word)) if self.beta.max_digit < 10 else ",".join(map(str, self.word)),
            "left": mpmath.nstr(self.left, 20),
            "length": mpmath.nstr(self.length, 20),
            "is_full": self.is_full,
        }


def _to_mpf(x, prec: int) -> mpmath.mpf:
    with mpmath.workprec(prec):
        if isinstance(x, mpmath.mpf):
            return +x
        if isinstance(x, (int, float)):
            return mpmath.mpf(x)
        expr = to_expr(x)
        return mpmath.mpf(sympy.N(expr, int(prec * 0.31) + 10))


def _snap(y: mpmath.mpf, tol: mpmath.mpf) -> mpmath.mpf:
    """Round ``y`` to the nearest integer when it is within ``tol`` of one."""
    k = mpmath.nint(y)
    if abs(y - k) <= tol:
        return k
    return y


def _length_error(beta: Beta, n: int) -> mpmath.mpf:
    return mpmath.ldexp(n + 1, 4 - beta.precision_bits)


def _children(image: mpmath.mpf, beta: Beta) -> list[tuple[int, mpmath.mpf]]:
    """Admissible next digits from a cylinder with the given image, with child images."""
    tol = beta.snap_tolerance
    scaled = _snap(image * beta.value, tol)
    out = []
    j = 0
    while j < scaled:
        child = scaled - j
        if child >= 1:
            child = mpmath.mpf(1)
        else:
            child = _snap(child, tol)
            if child <= 0:
                break
        out.append((j, child))
        j += 1
    return out


def beta_digits(x, beta: Beta, n: int) -> DigitSeq:
    """First ``n`` digits ``eps_k = floor(beta T^{k-1} x)`` of the beta-expansion of x."""
    if n < 1:
        raise DomainError("n must be positive")
    beta = Beta.parse(beta)
    with mpmath.workprec(beta.precision_bits):
        t = _to_mpf(x, beta.precision_bits)
        if not 0 <= t < 1:
            raise DomainError(f"x must lie in [0, 1), got {x}")
        tol = beta.snap_tolerance
        digits = []
        for _ in range(n):
            y = _snap(beta.value * t, tol)
            dgt = int(mpmath.floor(y))
            digits.append(dgt)
            t = y - dgt
    return DigitSeq(tuple(digits), beta)


def quasi_greedy_one(beta: Beta, n: int) -> DigitSeq:
    """Length-n prefix of the quasi-greedy expansion of 1 (the largest admissible word)."""
    if n < 1:
        raise DomainError("n must be positive")
    beta = Beta.parse(beta)
    with mpmath.workprec(beta.precision_bits):
        tol = beta.snap_tolerance
        t = mpmath.mpf(1)
        greedy = []
        finite = False
        while len(greedy) < n:
            y = _snap(beta.value * t, tol)
            dgt = int(mpmath.floor(y))
            t = y - dgt
            greedy.append(dgt)
            if t == 0:
                finite = True
                break
    if finite:
        period = greedy[:-1] + [greedy[-1] - 1]
        digits = [period[i % len(period)] for i in range(n)]
    else:
        digits = greedy[:n]
    return DigitSeq(tuple(digits), beta)


def cylinder(word: Sequence[int], beta: Beta) -> Cylinder:
    """Cylinder of ``word``; raises DomainError when the word is not admissible."""
    beta = Beta.parse(beta)
    word = tuple(int(w) for w in word)
    with mpmath.workprec(beta.precision_bits):
        image = mpmath.mpf(1)
        left = mpmath.mpf(0)
        scale = mpmath.mpf(1)
        for pos, dgt in enumerate(word):
            scale /= beta.value
            nxt = dict(_children(image, beta))
            if dgt not in nxt:
                raise DomainError(f"word {word} is not {beta}-admissible (fails at position {pos + 1})")
            left += dgt * scale
            image = nxt[dgt]
        return Cylinder(word, beta, left, image, _length_error(beta, len(word)))


def is_full(cyl: Cylinder) -> bool:
    """True iff the cylinder has maximal length ``beta**-n``."""
    beta = cyl.beta
    with mpmath.workprec(beta.precision_bits):
        gap = abs(cyl.image - 1) / beta.power(cyl.n)
        if gap <= cyl.length_error:
            return True
        if cyl.length_error * 2 >= 1 / beta.power(cyl.n):
            raise IndeterminateError(
                f"length error {mpmath.nstr(cyl.length_error, 5)} too large to decide fullness at level {cyl.n}"
            )
        return False


def count_cylinders(beta: Beta, n: int) -> list[tuple[int, int]]:
    """``[(#Sigma^k, #Lambda^k) for k = 1..n]`` by dynamic programming over images."""
    beta = Beta.parse(beta)
    if n < 1:
        raise DomainError("n must be positive")
    out = []
    with mpmath.workprec(beta.precision_bits):
        states = {mpmath.mpf(1): 1}
        for _ in range(n):
            nxt: dict = defaultdict(int)
            for image, mult in states.items():
                for _, child in _children(image, beta):
                    nxt[child] += mult
            states = dict(nxt)
            total = sum(states.values())
            full = states.get(mpmath.mpf(1), 0)
            out.append((total, full))
    return out


def _check_cap(beta: Beta, n: int, cap: int) -> None:
    total = count_cylinders(beta, n)[-1][0]
    if total > cap:
        raise ResourceError(f"{total} cylinders at level {n} exceed the enumeration cap {cap}")


def _walk(beta: Beta, n: int, window=None, full_only: bool = False) -> Iterator[Cylinder]:
    err = _length_error(beta, n)
    with mpmath.workprec(beta.precision_bits):
        inv = [1 / beta.power(k) for k in range(n + 1)]
        if window is not None:
            lo = _to_mpf(window[0], beta.precision_bits)
            hi = _to_mpf(window[1], beta.precision_bits)
            # endpoints computed along different sums may differ by rounding
            slack = beta.snap_tolerance
        stack = [((), mpmath.mpf(0), mpmath.mpf(1))]
        while stack:
            word, left, image = stack.pop()
            k = len(word)
            if window is not None:
                right = left + image * inv[k]
                if right <= lo + slack or left >= hi - slack:
                    continue
            if k == n:
                if full_only and image != 1:
                    continue
                if window is not None and not (lo - slack <= left and left + image * inv[k] <= hi + slack):
                    continue
                yield Cylinder(word, beta, left, image, err)
                continue
            kids = _children(image, beta)
            for dgt, child in reversed(kids):
                stack.append((word + (dgt,), left + dgt * inv[k + 1], child))


def enumerate_cylinders(beta: Beta, n: int, cap: int = ENUMERATION_CAP) -> list[Cylinder]:
    """All level-n cylinders in lexicographic (equivalently left-to-right) order."""
    beta = Beta.parse(beta)
    if n < 1:
        raise DomainError("n must be positive")
    _check_cap(beta, n, cap)
    return list(_walk(beta, n))


def enumerate_full(beta: Beta, n: int, window=None, cap: int = ENUMERATION_CAP) -> list[Cylinder]:
    """Full level-n cylinders, optionally only those inside ``window = (lo, hi)``."""
    beta = Beta.parse(beta)
    if n < 1:
        raise DomainError("n must be positive")
    if window is not None:
        lo, hi = (_to_mpf(w, beta.precision_bits) for w in window)
        if not (0 <= lo < hi <= 1):
            raise DomainError("window must be a sub-interval of [0, 1)")
    else:
        _check_cap(beta, n, cap)
    return list(_walk(beta, n, window=window, full_only=True))


@dataclass
class CoverageReport:
    beta: str
    N: int
    depth: int
    covered: float
    uncovered: float
    uncovered_by_level: list
    bound: float

    @property
    def geometric_bound_holds(self) -> bool:
        """Uncovered measure within the per-level factor ``(1 - 1/beta)``."""
        return self.uncovered <= self.bound * (1 + 1e-12)

    @property
    def monotone(self) -> bool:
        r = self.uncovered_by_level
        return all(b <= a * (1 + 1e-12) for a, b in zip(r, r[1:]))

    @property
    def passed(self) -> bool:
        """Residuals never grow and strictly shrink over the range (or vanish)."""
        r = self.uncovered_by_level
        return self.monotone and (r[-1] == 0 or r[-1] < r[0])

    def as_dict(self) -> dict:
        return {
            "beta": self.beta, "N": self.N, "depth": self.depth,
            "covered": self.covered, "uncovered": self.uncovered,
            "uncovered_by_level": self.uncovered_by_level,
            "bound": self.bound, "geometric_bound_holds": self.geometric_bound_holds,
            "monotone": self.monotone, "passed": self.passed,
        }


def full_cover_check(beta: Beta, N: int, depth: int) -> CoverageReport:
    """Measure left uncovered by full cylinders of levels ``N..depth``.

    A point is uncovered at level ``k`` iff the level-k cylinder containing
    it and all its ancestors down to level N are non-full, so only the
    images of non-full cylinders have to be propagated.
    """
    beta = Beta.parse(beta)
    if N < 1 or depth < N:
        raise PreconditionError("need 1 <= N <= depth")
    with mpmath.workprec(beta.precision_bits):
        one = mpmath.mpf(1)
        states = {one: 1}
        for _ in range(N):
            nxt: dict = defaultdict(int)
            for image, mult in states.items():
                for _, child in _children(image, beta):
                    nxt[child] += mult
            states = nxt
        residuals = []
        level = N
        while True:
            nonfull = {im: m for im, m in states.items() if im != one}
            unc = sum((m * im for im, m in nonfull.items()), mpmath.mpf(0)) / beta.power(level)
            residuals.append(float(unc))
            if level == depth:
                break
            nxt = defaultdict(int)
            for image, mult in nonfull.items():
                for _, child in _children(image, beta):
                    nxt[child] += mult
            states = nxt
            level += 1
        bound = float((1 - 1 / beta.value) ** (depth - N + 1))
    return CoverageReport(str(beta.expr), N, depth, 1 - residuals[-1], residuals[-1], residuals, bound)


def cylinders_to_csv(cyls: Sequence[Cylinder]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=";", lineterminator="\n")
    writer.writerow(["word", "left", "length", "is_full"])
    for c in cyls:
        row = c.as_row()
        writer.writerow([row["word"], row["left"], row["length"], int(row["is_full"])])
    return buf.getvalue()


def cylinders_to_json(cyls: Sequence[Cylinder]) -> str:
    beta = cyls[0].beta if cyls else None
    payload = {
        "beta": str(beta.expr) if beta else None,
        "precision_bits": beta.precision_bits if beta else None,
        "cylinders": [
            {"word": list(c.word), "left": mpmath.nstr(c.left, 25), "length": mpmath.nstr(c.length, 25),
             "length_error": mpmath.nstr(c.length_error, 5), "is_full": c.is_full}
            for c in cyls
        ],
    }
    return json.dumps(payload, indent=1)


def renyi_bounds(beta: Beta, n: int) -> tuple[float, float]:
    b = float(Beta.parse(beta).value)
    return b ** n, b ** (n + 1) / (b - 1)


def li_lower_bound(beta: Beta, n: int) -> float:
    """Lower bound for ``#Lambda^n``: exact for integers, strict otherwise."""
    beta = Beta.parse(beta)
    b = float(beta.value)
    if beta.is_integer:
        return b ** n
    if b > 2:
        return (b - 2) / (b - 1) * b ** n
    # product over i >= 1 of (1 - b^-i), truncated once terms are below 1e-17
    prod = 1.0
    i = 1
    while True:
        term = b ** -i
        prod *= 1 - term
        if term < 1e-17:
            break
        i += 1
    return prod * b ** n


def contains_word(cyls: Sequence[Cylinder], x) -> Cylinder:
    """The cylinder of a sorted level-n list that contains ``x``."""
    lo, hi = 0, len(cyls)
    while lo < hi:
        mid = (lo + hi) // 2
        if cyls[mid].left <= x:
            lo = mid + 1
        else:
            hi = mid
    if lo == 0:
        raise DomainError("x below every cylinder")
    return cyls[lo - 1]


def level_for_length(beta: Beta, length: float) -> int:
    """Smallest n with ``beta**-n <= length``."""
    return max(1, math.ceil(-math.log(length) / Beta.parse(beta).log))
