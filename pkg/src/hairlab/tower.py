"""Overflow-proof arithmetic on iterated-exponential magnitudes.

A :class:`TowerReal` ``(m, x)`` stands for ``E^m(x)``.  The canonical form
keeps the mantissa in the fundamental interval ``[x0, E(x0))`` (or at level
0 below ``x0``), so ``tower_exp``/``tower_log`` on large values are pure
level bookkeeping.

Precision contract: only the mantissa carries relative precision (about
``m * 1e-14``); the absolute error of a high tower is meaningless.
Additive corrections are pushed down the tower through
``E^m(x) + d = E(E^{m-1}(x) + log1p(d / E^m(x)))``.  Once the correction
falls below the unit roundoff of the mantissa it is dropped, either by
underflow of ``d / E^m(x)`` or by the final float addition.  The drop is
deterministic, so results are reproducible across platforms.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .dynamics import HARDWARE_LIMIT, TWO_PI, Params
from .errors import DomainError, RegimeError, TowerRequired

_LOG_MAX = 709.0


@dataclass(frozen=True, order=True)
class TowerReal:
    """E^level(mantissa).  Ordering is lexicographic, valid on canonical forms."""

    level: int
    mantissa: float

    def __str__(self):
        return f"E^{self.level}({self.mantissa:.17g})"

    @classmethod
    def parse(cls, text: str) -> "TowerReal":
        m = re.fullmatch(r"\s*E\^\{?(\d+)\}?\((.+)\)\s*", text)
        if not m:
            raise ValueError(f"not a tower: {text!r}")
        return cls(int(m.group(1)), float(m.group(2)))


def canonical(p: Params, level: int, x: float) -> TowerReal:
    if not math.isfinite(x):
        raise TowerRequired(f"non-finite mantissa {x}")
    if level < 0:
        raise DomainError("negative tower level")
    ex0 = p.E(p.x0)
    while level > 0 and x < p.x0:
        x = p.E(x)
        level -= 1
    if level == 0 and x < ex0:
        return TowerReal(0, x)
    while x >= ex0:
        x = p.L(x)
        level += 1
    return TowerReal(level, x)


def tower(p: Params, x: float, level: int = 0) -> TowerReal:
    return canonical(p, level, float(x))


def is_canonical(p: Params, t: TowerReal) -> bool:
    if t.level == 0:
        return t.mantissa < p.E(p.x0)
    return p.x0 <= t.mantissa < p.E(p.x0)


def to_float(p: Params, t: TowerReal) -> float:
    """Hardware value of the tower, ``inf`` when it does not fit."""
    x = t.mantissa
    for _ in range(t.level):
        if x > _LOG_MAX - p.log_lam:
            return math.inf
        x = p.lam * math.exp(x)
    return x


def log_value(p: Params, t: TowerReal) -> float:
    """ln of the tower's value as a float (``inf`` when even that overflows)."""
    if t.level == 0:
        if t.mantissa <= 0:
            raise DomainError("log of non-positive value")
        return math.log(t.mantissa)
    return to_float(p, TowerReal(t.level - 1, t.mantissa)) + p.log_lam


def tower_exp(p: Params, t: TowerReal) -> TowerReal:
    if t.level == 0 and t.mantissa < p.x0:
        return canonical(p, 0, p.E(t.mantissa))
    return canonical(p, t.level + 1, t.mantissa)


def tower_log(p: Params, t: TowerReal) -> TowerReal:
    if t.level >= 1:
        return canonical(p, t.level - 1, t.mantissa)
    if t.mantissa <= p.alpha:
        raise DomainError(f"L applied at {t.mantissa} <= alpha={p.alpha}")
    return canonical(p, 0, p.L(t.mantissa))


def _ratio(p: Params, d: float, level: int, x: float) -> float:
    """d / E^level(x) without overflow."""
    if d == 0.0:
        return 0.0
    lv = log_value(p, TowerReal(level, x))
    e = math.log(abs(d)) - lv
    if e < -745.0:
        return 0.0
    return math.copysign(math.exp(e), d)


def add_raw(p: Params, level: int, x: float, d: float) -> float:
    """Mantissa x' with E^level(x') = E^level(x) + d, no canonicalization."""
    while level > 0:
        r = _ratio(p, d, level, x)
        if r == 0.0:
            return x
        if r <= -1.0:
            raise DomainError("add_small would make the value non-positive")
        d = math.log1p(r)
        level -= 1
    return x + d


def add_small(p: Params, t: TowerReal, d: float) -> TowerReal:
    if abs(d) > HARDWARE_LIMIT:
        raise DomainError(f"|d|={abs(d)} exceeds the add_small bound")
    t = canonical(p, t.level, t.mantissa)
    return canonical(p, t.level, add_raw(p, t.level, t.mantissa, d))


def scale_raw(p: Params, level: int, x: float, c: float) -> float:
    """Mantissa x' with E^level(x') = c * E^level(x), level >= 1."""
    return add_raw(p, level - 1, x, math.log(c))


def tower_scale(p: Params, t: TowerReal, c: float) -> TowerReal:
    """Multiply by a positive constant: E^m(x) c = E(E^{m-1}(x) + ln c)."""
    if c <= 0:
        raise DomainError("tower_scale needs c > 0")
    if t.level == 0:
        return canonical(p, 0, t.mantissa * c)
    return canonical(p, t.level, scale_raw(p, t.level, t.mantissa, c))


def rel_diff(p: Params, a: TowerReal, b: TowerReal) -> float:
    """Relative difference: hardware values when both are small, else aligned mantissas."""
    fa, fb = to_float(p, a), to_float(p, b)
    if max(abs(fa), abs(fb)) <= HARDWARE_LIMIT:
        return abs(fa - fb) / abs(fb) if fb != 0 else abs(fa)
    a = canonical(p, a.level, a.mantissa)
    b = canonical(p, b.level, b.mantissa)
    if a.level > b.level:
        a, b = b, a
    xa, la = a.mantissa, a.level
    while la < b.level:
        if xa <= 0:
            return math.inf
        xa = p.L(xa)
        la += 1
    return abs(xa - b.mantissa) / abs(b.mantissa)


@dataclass(frozen=True)
class RealDominantComplex:
    """magnitude * exp(i angle), angle in (-pi, pi]."""

    magnitude: TowerReal
    angle: float

    @classmethod
    def from_complex(cls, p: Params, z: complex) -> "RealDominantComplex":
        z = complex(z)
        return cls(tower(p, abs(z)), _reduce(math.atan2(z.imag, z.real)))

    @classmethod
    def from_parts(cls, p: Params, re: TowerReal, im: float) -> "RealDominantComplex":
        """Build from a positive tower real part and a float imaginary part."""
        if re.level == 0:
            return cls.from_complex(p, complex(re.mantissa, im))
        r = _ratio(p, im, re.level, re.mantissa)
        mag = canonical(p, re.level, scale_raw(p, re.level, re.mantissa, math.hypot(1.0, r)))
        return cls(mag, math.atan(r))

    def to_complex(self, p: Params) -> complex:
        r = to_float(p, self.magnitude)
        if math.isinf(r):
            raise TowerRequired(f"{self.magnitude} does not fit hardware floats")
        return complex(r * math.cos(self.angle), r * math.sin(self.angle))

    def conjugate(self) -> "RealDominantComplex":
        return RealDominantComplex(self.magnitude, _reduce(-self.angle))

    def real(self, p: Params) -> TowerReal:
        c = math.cos(self.angle)
        if self.magnitude.level == 0 or c <= 0:
            return canonical(p, 0, to_float(p, self.magnitude) * c)
        return tower_scale(p, self.magnitude, c)

    def real_value(self, p: Params) -> float:
        r = to_float(p, self.magnitude)
        c = math.cos(self.angle)
        return r * c if math.isfinite(r) else math.copysign(math.inf, c)

    def imag(self, p: Params) -> float:
        s = math.sin(self.angle)
        if s == 0.0:
            return 0.0
        r = to_float(p, self.magnitude)
        if math.isfinite(r):
            return r * s
        raise RegimeError("imaginary part of a non-hardware tower point is not representable")


def _reduce(theta: float) -> float:
    theta = math.remainder(theta, TWO_PI)
    return math.pi if theta == -math.pi else theta


def step_orbit(p: Params, z: RealDominantComplex) -> RealDominantComplex:
    """E(z) for a real-dominant point."""
    r = to_float(p, z.magnitude)
    if math.isfinite(r) and r * math.cos(z.angle) <= 700.0:
        w = z.to_complex(p)
        return RealDominantComplex.from_complex(p, p.lam * _cexp(w))
    if abs(z.angle) > math.pi / 4:
        raise RegimeError(f"angle {z.angle} outside the real-dominant regime at {z.magnitude}")
    im = z.imag(p)
    if abs(im) > HARDWARE_LIMIT:
        raise RegimeError("imaginary part too large to reduce mod 2pi")
    return RealDominantComplex(tower_exp(p, z.real(p)), _reduce(im))


def _cexp(w: complex) -> complex:
    m = math.exp(w.real)
    return complex(m * math.cos(w.imag), m * math.sin(w.imag))
