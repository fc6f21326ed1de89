"""Hairs of E: itineraries, the finite-depth points h_{s,n}(u), traces, endpoints
and horizon-limited membership in X(x0, psi).

h_{s,n}(u) = L_{s_0} o ... o L_{s_n} (E^{n+1}(u)) is evaluated top-down on the
raw tower E^{n+1}(u).  Every inverse branch lowers the level by one; the
angular part of |w| is pushed into the mantissa as an additive excess, kept
separately from u so that Re h - u never suffers cancellation.
"""
from __future__ import annotations

import csv
import functools
import math
import random
from dataclasses import dataclass, field
from typing import Sequence, Union

from .dynamics import TWO_PI, Params, inverse_branch, strip_index
from .errors import DomainError, FatouEscape, RegimeError, ResolutionError
from .tower import (
    RealDominantComplex,
    TowerReal,
    canonical,
    log_value,
    step_orbit,
    to_float,
    tower,
    tower_exp,
)

_MAX_EXACT_SYMBOL = 2.0**53


@dataclass(frozen=True)
class Periodic:
    block: tuple[int, ...]

    def __post_init__(self):
        if not self.block:
            raise DomainError("periodic block must be non-empty")
        object.__setattr__(self, "block", tuple(int(b) for b in self.block))

    def symbol(self, k: int) -> int:
        return self.block[k % len(self.block)]

    def shift(self) -> "Periodic":
        return Periodic(self.block[1:] + self.block[:1])


@functools.lru_cache(maxsize=64)
def _bounded_block(bound: int, seed: int, length: int) -> tuple[int, ...]:
    rng = random.Random(seed)
    return tuple(rng.randint(-bound, bound) for _ in range(length))


@dataclass(frozen=True)
class Bounded:
    """Pseudo-random symbols in [-bound, bound], reproducible from the seed."""

    bound: int
    seed: int
    offset: int = 0

    def symbol(self, k: int) -> int:
        idx = k + self.offset
        length = 64
        while length <= idx:
            length *= 2
        return _bounded_block(self.bound, self.seed, length)[idx]

    def shift(self) -> "Bounded":
        return Bounded(self.bound, self.seed, self.offset + 1)


@dataclass(frozen=True)
class Growth:
    """s_k = round(E^{k+offset}(t)): the fastest-growing allowable tails."""

    t: float
    offset: int = 0

    def magnitude(self, p: Params, k: int) -> TowerReal:
        v = tower(p, self.t)
        for _ in range(k + self.offset):
            v = tower_exp(p, v)
        return v

    def symbol_for(self, p: Params, k: int) -> int:
        v = to_float(p, self.magnitude(p, k))
        if v > _MAX_EXACT_SYMBOL:
            raise RegimeError(f"growth symbol at index {k} exceeds exact integer range")
        return round(v)

    def shift(self) -> "Growth":
        return Growth(self.t, self.offset + 1)


Tail = Union[Periodic, Bounded, Growth]


@dataclass(frozen=True)
class Itinerary:
    prefix: tuple[int, ...] = ()
    tail: Tail = field(default_factory=lambda: Periodic((0,)))

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(x) for x in self.prefix))

    def symbol(self, p: Params, k: int) -> int:
        if k < len(self.prefix):
            return self.prefix[k]
        j = k - len(self.prefix)
        if isinstance(self.tail, Growth):
            return self.tail.symbol_for(p, j)
        return self.tail.symbol(j)

    def symbols(self, p: Params, n: int) -> list[int]:
        return [self.symbol(p, k) for k in range(n)]

    def magnitude(self, p: Params, k: int) -> TowerReal:
        """|s_k| as a tower (exact for non-growth tails)."""
        if isinstance(self.tail, Growth) and k >= len(self.prefix):
            return self.tail.magnitude(p, k - len(self.prefix))
        return tower(p, abs(self.symbol(p, k)))

    def shift(self) -> "Itinerary":
        if self.prefix:
            return Itinerary(self.prefix[1:], self.tail)
        return Itinerary((), self.tail.shift())

    def certificate(self, p: Params) -> float:
        """A parameter t at which limsup |s_k| / E^k(t) is finite."""
        return critical_parameter(p, self) + 1.0


def zeros() -> Itinerary:
    return Itinerary((), Periodic((0,)))


def critical_parameter(p: Params, s: Itinerary) -> float:
    """u_s: beta for bounded tails, max(beta, t) for growth tails (index-aligned)."""
    if not isinstance(s.tail, Growth):
        return p.beta
    # s_k ~ E^{k + j}(t) with j = offset - len(prefix), so u_s = E^j(t)
    j = s.tail.offset - len(s.prefix)
    x = tower(p, s.tail.t)
    for _ in range(max(j, 0)):
        x = tower_exp(p, x)
    x = to_float(p, x)
    for _ in range(max(-j, 0)):
        if x <= p.alpha:
            break
        x = p.L(x)
    return max(p.beta, x)


def allowability_log_ratio(p: Params, s: Itinerary, u: float, k: int) -> float:
    """ln(|s_k| / E^k(u)), -inf for zero symbols, +-inf when unresolvable in floats."""
    mag = s.magnitude(p, k)
    if mag.level == 0 and mag.mantissa == 0:
        return -math.inf
    a = tower(p, u)
    for _ in range(k):
        a = tower_exp(p, a)
    return _log_ratio(p, mag, a)


def _log_ratio(p: Params, a: TowerReal, b: TowerReal) -> float:
    la, lb = log_value(p, a), log_value(p, b)
    if math.isfinite(la) and math.isfinite(lb):
        return la - lb
    # both beyond floats: ln a - ln b = L-level difference one step down
    if a.level == b.level and a.mantissa == b.mantissa:
        return 0.0
    return math.inf if (a.level, a.mantissa) > (b.level, b.mantissa) else -math.inf


@dataclass(frozen=True)
class HairPoint:
    """h_{s,n}(u) together with the orbit data produced while computing it.

    ``excess`` is Re h - u.  ``orbit_excess[k]`` and ``orbit_im[k]`` describe
    E^k(h) = h_{sigma^k s, n-k}(E^k(u)) as E^k(u + orbit_excess[k]) + i orbit_im[k].
    """

    params: Params
    itinerary: Itinerary
    u: float
    depth: int
    value: RealDominantComplex
    excess: float
    orbit_excess: tuple[float, ...] = field(repr=False)
    orbit_im: tuple[float, ...] = field(repr=False)

    @property
    def z(self) -> complex:
        return complex(self.u + self.excess, self.orbit_im[0])

    def orbit_point(self, k: int) -> RealDominantComplex:
        """E^k(h) for any k >= 0 (real E^k(u) beyond the depth)."""
        p = self.params
        if k > self.depth:
            t = tower(p, self.u)
            for _ in range(k):
                t = tower_exp(p, t)
            return RealDominantComplex(t, 0.0)
        re = canonical(p, k, self.u + self.orbit_excess[k]) if k else tower(p, self.u + self.excess)
        return RealDominantComplex.from_parts(p, re, self.orbit_im[k])

    def sandwich_bound(self) -> float:
        """pi * sum_{k=1}^{n} (2|s_k|+1) / (beta^{k-1} E^k(u)), summed in log domain."""
        p = self.params
        total = 0.0
        t = tower(p, self.u)
        for k in range(1, self.depth + 1):
            t = tower_exp(p, t)
            lv = log_value(p, t)
            if math.isinf(lv):
                break
            s = abs(self.itinerary.symbol(p, k))
            total += math.exp(math.log(math.pi * (2 * s + 1)) - (k - 1) * math.log(p.beta) - lv)
        return total

    def sandwich_slack(self) -> tuple[float, float]:
        """(Re h - u, ln(bound) - ln(Re h - u)); both are >= 0 when the sandwich holds."""
        hi = self.sandwich_bound()
        if self.excess <= 0.0:
            return self.excess, math.inf
        if hi == 0.0:
            return self.excess, -math.inf
        return self.excess, math.log(hi) - math.log(self.excess)


def _push_down(p: Params, level: int, x: float, d: float) -> float:
    """Increment of the level-``level`` mantissa x that adds d to E^level(x)."""
    while level > 0:
        lv = log_value(p, TowerReal(level, x))
        if d == 0.0 or math.isinf(lv):
            return 0.0
        e = math.log(abs(d)) - lv
        if e < -745.0:
            return 0.0
        r = math.copysign(math.exp(e), d)
        d = math.log1p(r)
        level -= 1
    return d


def trace_hair_point(p: Params, s: Itinerary, u: float, n: int) -> HairPoint:
    u = float(u)
    if n < 0:
        raise DomainError("depth must be non-negative")
    us = critical_parameter(p, s)
    if not u > us:
        raise DomainError(f"u={u} must exceed the critical parameter {us}")
    symbols = s.symbols(p, n + 1)
    excess = [0.0] * (n + 1)
    ims = [0.0] * (n + 1)
    # state: Re = E^level(u + delta), Im = im; start at L_{s_n}(E^{n+1}(u))
    delta, im = 0.0, TWO_PI * symbols[n]
    excess[n], ims[n] = delta, im
    for k in range(n - 1, -1, -1):
        level = k + 1
        x = u + delta
        re_val = to_float(p, TowerReal(level, x))
        if im == 0.0:
            corr, ang = 0.0, 0.0
        elif math.isinf(re_val):
            # |im| / Re underflows: the branch only adds its 2 pi s_k
            corr, ang = 0.0, 0.0
        else:
            r = im / re_val
            corr = 0.5 * math.log1p(r * r)
            ang = math.atan2(im, re_val)
        # ln|w| - ln lam = E^{level-1}(x) + corr
        delta += _push_down(p, level - 1, x, corr) if level - 1 else corr
        im = ang + TWO_PI * symbols[k]
        excess[k], ims[k] = delta, im
        if u + delta < p.beta:
            raise FatouEscape(k, complex(u + delta, im))
    value = RealDominantComplex.from_complex(p, complex(u + delta, im))
    return HairPoint(p, s, u, n, value, delta, tuple(excess), tuple(ims))


def trace_hair_point_direct(p: Params, s: Itinerary, u: float, n: int) -> complex:
    """The same composition with hardware inverse branches; valid while E^{n+1}(u) fits."""
    w = complex(to_float(p, canonical(p, n + 1, u) if n + 1 else tower(p, u)))
    if math.isinf(w.real):
        raise RegimeError("E^{n+1}(u) exceeds hardware floats")
    for k in range(n, -1, -1):
        w = inverse_branch(p, s.symbol(p, k), w)
    return w


@dataclass(frozen=True)
class HairTrace:
    points: tuple[HairPoint, ...]
    gaps: tuple[float, ...]


def sample_parameters(us: float, u_lo: float, u_hi: float, m: int) -> list[float]:
    if m < 2:
        raise DomainError("need at least two samples")
    if not us < u_lo < u_hi:
        raise DomainError("need u_s < u_lo < u_hi")
    a, b = u_lo - us, u_hi - us
    return [us + a * (b / a) ** (j / (m - 1)) for j in range(m)]


def trace_hair(p: Params, s: Itinerary, u_lo: float, u_hi: float, n: int, m: int) -> HairTrace:
    us = critical_parameter(p, s)
    pts = tuple(trace_hair_point(p, s, u, n) for u in sample_parameters(us, u_lo, u_hi, m))
    gaps = tuple(abs(b.z - a.z) for a, b in zip(pts, pts[1:]))
    return HairTrace(pts, gaps)


def write_trace_csv(trace: HairTrace, path, prefix_len: int = 8) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "depth", "re", "im", "level", "strips"])
        for h in trace.points:
            strips = " ".join(str(strip_index(v)) for v in h.orbit_im[:prefix_len])
            top = canonical(h.params, h.depth + 1, h.u)
            z = h.z
            w.writerow([f"{h.u:.17g}", h.depth, f"{z.real:.17g}", f"{z.imag:.17g}", top.level, strips])


@dataclass(frozen=True)
class EndpointEstimate:
    value: complex
    error: float
    depth: int
    samples: tuple[complex, ...]
    kind: str = "NUMERICAL-ESTIMATE"


def estimate_endpoint(p: Params, s: Itinerary, n: int = 40, tol: float = 1e-8,
                      js: Sequence[int] = tuple(range(3, 13))) -> EndpointEstimate:
    """Extrapolate h_{s,n}(u_s + delta) to delta -> 0 with delta_j = 2^-j.

    The reported error combines the spread of the last two Richardson
    extrapolants with the depth change h_{s,n} - h_{s,n-1} at the smallest
    delta.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    us = critical_parameter(p, s)
    deltas = [2.0**-j for j in js]
    vals = [trace_hair_point(p, s, us + d, n).z for d in deltas]
    # linear Richardson on consecutive halvings
    rich = [2 * b - a for a, b in zip(vals, vals[1:])][-3:]
    err = abs(rich[-1] - rich[-2])
    if n >= 1:
        err = max(err, abs(vals[-1] - trace_hair_point(p, s, us + deltas[-1], n - 1).z))
    if not err <= tol:
        raise ResolutionError(f"endpoint not resolved at depth {n} (spread {err:.3g} > tol {tol:.3g})")
    return EndpointEstimate(rich[-1], err, n, tuple(vals))


@dataclass(frozen=True)
class Verdict:
    inside: bool
    k: int | None = None
    reason: str = ""

    def __str__(self):
        return "IN" if self.inside else f"OUT({self.k}: {self.reason})"


def _orbit(p: Params, z):
    """Yield (Re tower, Im float) of E^k(z), k = 0, 1, ...; Im may raise RegimeError."""
    if isinstance(z, (HairPoint, ShiftedHairPoint)):
        k, z = (z.k, z.point) if isinstance(z, ShiftedHairPoint) else (0, z)
        while True:
            if k <= z.depth:
                yield canonical(p, k, z.u + z.orbit_excess[k]) if k else tower(p, z.u + z.excess), z.orbit_im[k]
            else:
                yield z.orbit_point(k).magnitude, 0.0
            k += 1
    if isinstance(z, (int, float)):
        t = tower(p, float(z))
        while True:
            yield t, 0.0
            t = tower_exp(p, t)
    w = z if isinstance(z, RealDominantComplex) else RealDominantComplex.from_complex(p, complex(z))
    while True:
        c = math.cos(w.angle)
        if c <= 0:
            yield tower(p, w.real_value(p)) if math.isfinite(w.real_value(p)) else None, None
            return
        yield w.real(p), w.imag(p)
        w = step_orbit(p, w)


def in_X(p: Params, psi, z, k_max: int) -> Verdict:
    """Horizon-k_max test of Re E^k(z) > E^k(x0) and |Im E^k(z)| < psi(Re E^k(z))."""
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    anchor = tower(p, p.x0)
    orbit = _orbit(p, z)
    for k in range(k_max + 1):
        try:
            re, im = next(orbit)
        except RegimeError as exc:
            return Verdict(False, k, f"regime: {exc}")
        except StopIteration:
            return Verdict(False, k, "left the right half-plane")
        if re is None or im is None:
            return Verdict(False, k, "left the right half-plane")
        if k == 0 and to_float(p, re) < p.beta:
            return Verdict(False, 0, "Fatou half-plane")
        if not re > anchor:
            return Verdict(False, k, "Re E^k(z) <= E^k(x0)")
        if im != 0.0 and not math.log(abs(im)) < psi.log_psi(p, re):
            return Verdict(False, k, "|Im| >= psi(Re)")
        if k < k_max:
            anchor = tower_exp(p, anchor)
    return Verdict(True)


@dataclass(frozen=True)
class ShiftedHairPoint:
    """E^k of a hair point, addressed through the orbit recorded while tracing."""

    point: HairPoint
    k: int


def shifted(p: Params, z, k: int):
    """E^k(z) in a form accepted by in_X."""
    if isinstance(z, HairPoint):
        return ShiftedHairPoint(z, k) if k else z
    if isinstance(z, (int, float)):
        t = tower(p, float(z))
        for _ in range(k):
            t = tower_exp(p, t)
        return RealDominantComplex(t, 0.0)
    w = z if isinstance(z, RealDominantComplex) else RealDominantComplex.from_complex(p, complex(z))
    for _ in range(k):
        w = step_orbit(p, w)
    return w


def eventual_membership(p: Params, z, profiles, k_shift: Sequence[int] = range(0, 6), k_max: int = 6):
    """First (profile, k) with E^k(z) certified in X(x0, psi) at horizon k_max, or None."""
    for k in k_shift:
        try:
            w = shifted(p, z, k)
        except (RegimeError, DomainError):
            return None
        for psi in profiles:
            if in_X(p, psi, w, k_max).inside:
                return psi, k
    return None
