"""Schroeder conjugacy S(beta z) = E(S(z)) at the repelling fixed point, and real
fractional iterates E^r(x) = S(beta^r S^{-1}(x)) on [alpha, inf)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from .dynamics import Params
from .errors import DomainError, ResolutionError
from .tower import TowerReal, canonical, to_float, tower, tower_exp

RADIUS_CANDIDATES = (4.0, 3.0, 2.0, 1.5, 1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001)
N_PROBES = 20
AGREE_TOL = 1e-9


def schroeder_coefficients(beta: float, n: int) -> list[float]:
    """Taylor coefficients of S at 0 from beta^k a_k = beta [z^k] exp(S - beta)."""
    a = [beta, 1.0]
    g = [1.0, 1.0]  # coefficients of exp(S(z) - beta)
    for k in range(2, n):
        rest = sum(j * a[j] * g[k - j] for j in range(1, k)) / k
        a.append(beta * rest / (beta**k - beta))
        g.append(rest + a[k])
    return a[:n]


def _cexpm1(w: complex) -> complex:
    x, y = w.real, w.imag
    if y == 0.0:
        return complex(math.expm1(x), 0.0)
    em1 = math.expm1(x)
    s = math.sin(0.5 * y)
    return complex(em1 * math.cos(y) - 2.0 * s * s, (em1 + 1.0) * math.sin(y))


def limit_formula(beta: float, z, n: int):
    """E^n(beta + z/beta^n), iterated on the deviation d -> beta*expm1(d)."""
    d = complex(z) / beta**n
    for _ in range(n):
        d = beta * _cexpm1(d)
    return beta + d


def limit_formula_adaptive(beta: float, z, tol: float = 1e-12, n0: int = 8, n_max: int | None = None):
    if n_max is None:
        # convergence is geometric with ratio 1/beta
        n_max = max(200, int(60.0 / math.log(beta)))
    prev = limit_formula(beta, z, n0)
    n = n0
    while n < n_max:
        n += 4
        cur = limit_formula(beta, z, n)
        if abs(cur - prev) < tol * max(1.0, abs(cur)):
            return cur, n
        prev = cur
    raise ResolutionError(f"limit formula did not settle at z={z} (last step {abs(cur - prev):.3g})")


@dataclass(frozen=True)
class SchroederFn:
    params: Params
    coeffs: tuple[float, ...]
    radius: float
    limit_depth: int
    validation: dict = field(default_factory=dict, compare=False)

    def series(self, z):
        acc = 0.0 if isinstance(z, float) else 0j
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def series_deriv(self, x: float) -> float:
        acc = 0.0
        for k in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * x + k * self.coeffs[k]
        return acc


def build_schroeder(p: Params, n_coeffs: int = 160) -> SchroederFn:
    if n_coeffs < 2:
        raise DomainError("need at least two coefficients")
    coeffs = tuple(schroeder_coefficients(p.beta, n_coeffs))
    probe = SchroederFn(p, coeffs, 0.0, 0)
    best = None
    for rho in RADIUS_CANDIDATES:
        worst, depth = 0.0, 0
        # the outer circle keeps S(beta z) on the series for |z| <= rho
        for circle in (rho, rho * p.beta):
            for j in range(N_PROBES):
                z = circle * complex(math.cos(2 * math.pi * j / N_PROBES), math.sin(2 * math.pi * j / N_PROBES))
                try:
                    ref, n = limit_formula_adaptive(p.beta, z)
                except (OverflowError, ResolutionError):
                    worst = math.inf
                    break
                worst = max(worst, abs(probe.series(z) - ref) / max(1.0, abs(ref)))
                depth = max(depth, n)
            if math.isinf(worst):
                break
        if best is None or worst < best[1]:
            best = (rho, worst)
        if worst <= AGREE_TOL:
            return SchroederFn(p, coeffs, rho, depth, {"max_disagreement": worst, "probes": N_PROBES})
    raise ResolutionError(f"series and limit formula never agree to {AGREE_TOL}: best {best}")


def _S_scaled(f: SchroederFn, w: float, e: float) -> TowerReal:
    """S(beta^e * w) as a canonical tower."""
    p = f.params
    k = 0
    if w != 0.0:
        k = max(0, math.ceil(e + math.log(abs(w) / f.radius) / math.log(p.beta)))
    arg = w * p.beta ** (e - k)
    while abs(arg) > f.radius:
        k += 1
        arg = w * p.beta ** (e - k)
    t = tower(p, f.series(arg))
    for _ in range(k):
        t = tower_exp(p, t)
    return t


def eval_S(f: SchroederFn, x: float) -> TowerReal:
    return _S_scaled(f, float(x), 0.0)


def _solve_series(f: SchroederFn, y: float) -> float:
    """w in [-radius, radius] with series(w) = y; Newton with a bisection bracket."""
    lo, hi = -f.radius, f.radius
    w = min(max(y - f.params.beta, lo), hi)
    for _ in range(100):
        r = f.series(w) - y
        if r == 0.0:
            return w
        if r > 0:
            hi = w
        else:
            lo = w
        d = f.series_deriv(w)
        nxt = w - r / d if d > 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - w) <= 4e-16 * max(1.0, abs(w)):
            return nxt
        w = nxt
    return w


def _inv_scaled(f: SchroederFn, y) -> tuple[float, int]:
    """(w, e) with S^{-1}(y) = w * beta^e."""
    p = f.params
    t = y if isinstance(y, TowerReal) else tower(p, y)
    t = canonical(p, t.level, t.mantissa)
    if t.level == 0 and t.mantissa <= p.alpha:
        raise DomainError(f"S^-1 needs y > alpha, got {t.mantissa}")
    x, e = t.mantissa, t.level
    s_lo, s_hi = f.series(-f.radius), f.series(f.radius)
    while not s_lo < x < s_hi:
        x = p.L(x)
        e += 1
    return _solve_series(f, x), e


def eval_S_inverse(f: SchroederFn, y) -> float:
    w, e = _inv_scaled(f, y)
    return w * f.params.beta**e


def frac_iter(f: SchroederFn, r: float, x) -> TowerReal:
    """E^r(x); negative r gives L^{|r|}."""
    p = f.params
    t = x if isinstance(x, TowerReal) else tower(p, x)
    if t.level == 0 and t.mantissa == p.alpha:
        return t
    if t.level == 0 and t.mantissa < p.alpha:
        raise DomainError(f"fractional iterates live on [alpha, inf), got {t.mantissa}")
    w, e = _inv_scaled(f, t)
    return _S_scaled(f, w, e + r)


def frac_iter_float(f: SchroederFn, r: float, x) -> float:
    return to_float(f.params, frac_iter(f, r, x))


def write_coefficients(f: SchroederFn, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "coefficient"])
        for i, c in enumerate(f.coeffs):
            w.writerow([i, f"{c:.17g}"])
