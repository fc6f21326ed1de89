"""The map E(z) = lam * exp(z) for 0 < lam < 1/e, its fixed points and inverse branches."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DomainError, FatouEscape, TowerRequired

#: magnitudes above this are handed to tower arithmetic
HARDWARE_LIMIT = 1e15

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Params:
    lam: float
    alpha: float
    beta: float
    x0: float

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0 / math.e:
            raise DomainError(f"lambda={self.lam} outside (0, 1/e)")
        if not self.alpha < 1.0 < self.beta:
            raise DomainError("fixed points must satisfy alpha < 1 < beta")
        if not self.x0 > self.beta:
            raise DomainError(f"x0={self.x0} must exceed beta={self.beta}")

    @property
    def log_lam(self) -> float:
        return math.log(self.lam)

    def E(self, x: float) -> float:
        """Real E; raises TowerRequired instead of returning inf."""
        try:
            return self.lam * math.exp(x)
        except OverflowError:
            raise TowerRequired(f"E({x}) overflows hardware floats") from None

    def L(self, x: float) -> float:
        """Real inverse L(x) = log x - log lam."""
        if x <= 0:
            raise DomainError(f"L undefined at {x}")
        return math.log(x) - self.log_lam

    def with_x0(self, x0: float) -> "Params":
        return Params(self.lam, self.alpha, self.beta, x0)


def _bisect(f, lo, hi):
    flo = f(lo)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def _newton_polish(f, x):
    best, fbest = x, abs(f(x))
    for _ in range(3):
        d = f(x) / (f(x) + x - 1.0) if f(x) + x - 1.0 != 0 else 0.0
        x = x - d
        if abs(f(x)) < fbest:
            best, fbest = x, abs(f(x))
    return best


def find_fixed_points(lam: float, x0: float | None = None) -> Params:
    """Real fixed points alpha < 1 < beta of lam*e^x; x0 defaults to beta + 1."""
    if not 0.0 < lam < 1.0 / math.e:
        raise DomainError(f"lambda={lam} outside (0, 1/e)")

    def f(x):
        return lam * math.exp(x) - x

    # f' = f + x - 1, used by the Newton step
    alpha = _newton_polish(f, _bisect(f, 0.0, 1.0))
    beta = _newton_polish(f, _bisect(f, 1.0, -2.0 * math.log(lam) + 10.0))
    return Params(lam, alpha, beta, beta + 1.0 if x0 is None else x0)


def eval_E(p: Params, z: complex) -> complex:
    z = complex(z)
    if z.real > 700.0:
        raise TowerRequired(f"E({z}) overflows; use hairlab.tower")
    return p.lam * cmath.exp(z)


def inverse_branch(p: Params, s: int, w: complex) -> complex:
    """L_s(w) = ln|w| - ln lam + i(Arg w + 2 pi s), Arg in (-pi, pi]."""
    w = complex(w)
    if w == 0:
        raise DomainError("inverse branch undefined at 0")
    arg = math.atan2(w.imag, w.real)
    if arg == -math.pi:
        arg = math.pi
    return complex(math.log(abs(w)) - p.log_lam, arg + TWO_PI * s)


@dataclass(frozen=True)
class Strip:
    """P(k) = {Re z >= beta, (2k-1)pi <= Im z < (2k+1)pi}."""

    k: int

    def contains(self, p: Params, z: complex) -> bool:
        return z.real >= p.beta and strip_index(z.imag) == self.k


def strip_index(im: float) -> int:
    return math.floor((im + math.pi) / TWO_PI)


def itinerary_of(p: Params, z, n: int) -> tuple[int, ...]:
    """Strip indices of z, E(z), ..., E^{n-1}(z).

    Orbit points beyond the hardware limit continue in the real-dominant
    tower representation.
    """
    from .tower import RealDominantComplex, step_orbit

    symbols = []
    w = z if isinstance(z, RealDominantComplex) else RealDominantComplex.from_complex(p, complex(z))
    for j in range(n):
        re = w.real_value(p)
        if re < p.beta:
            raise FatouEscape(j, w.to_complex(p) if w.magnitude.level == 0 else w)
        symbols.append(strip_index(w.imag(p)))
        if j + 1 < n:
            w = step_orbit(p, w)
    return tuple(symbols)
