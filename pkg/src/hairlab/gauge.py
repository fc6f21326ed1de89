"""Gauge functions h(t) = t / p(1/t), width profiles psi, and the two growth
conditions comparing them.

Everything is evaluated in the log domain: ``log_p(y)`` takes y = ln x and
returns ln p(x), so arguments far beyond hardware floats stay usable.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Params
from .errors import DomainError
from .schroeder import SchroederFn, frac_iter
from .tower import TowerReal, log_value, tower, tower_exp

POINTS_PER_DECADE = 64


def _tower_from_log(p: Params, y: float) -> TowerReal:
    """The tower of e^y: e^y = E(y - ln lam)."""
    if y < 700.0:
        return tower(p, math.exp(y))
    return tower_exp(p, tower(p, y - p.log_lam))


def _log_of(p: Params, x) -> float:
    if isinstance(x, TowerReal):
        return log_value(p, x)
    if x <= 0:
        raise DomainError(f"log of non-positive {x}")
    return math.log(x)


@dataclass(frozen=True)
class GaugeSpec:
    """kind in {"power", "logpower", "fraciter", "fraciterpow"}.

    power(s): h = t^s, p = x^(s-1); logpower(s): p = (ln x)^s;
    fraciter(s): p = L^s(x); fraciterpow(s, gamma): p = L^s(x)^gamma.
    """

    kind: str
    s: float
    gamma: float = 1.0
    t0: float = 1.0
    schroeder: SchroederFn | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("power", "logpower", "fraciter", "fraciterpow"):
            raise DomainError(f"unknown gauge kind {self.kind!r}")
        if self.kind.startswith("fraciter") and self.schroeder is None:
            raise DomainError("fractional-iterate gauges need a Schroeder function")

    @classmethod
    def power(cls, s: float) -> "GaugeSpec":
        return cls("power", s, t0=1.0)

    @classmethod
    def log_power(cls, s: float) -> "GaugeSpec":
        # t (log 1/t)^s is increasing exactly for log(1/t) >= s
        return cls("logpower", s, t0=math.exp(-max(s, 1.0)))

    @classmethod
    def frac_iter(cls, f: SchroederFn, s: float, gamma: float = 1.0) -> "GaugeSpec":
        kind = "fraciter" if gamma == 1.0 else "fraciterpow"
        return cls(kind, s, gamma, t0=1.0 / f.params.beta, schroeder=f)

    def log_p(self, y: float) -> float:
        """ln p(e^y)."""
        if self.kind == "power":
            return (self.s - 1.0) * y
        if self.kind == "logpower":
            if y <= 0:
                raise DomainError("(log x)^s needs x > 1")
            return self.s * math.log(y)
        f = self.schroeder
        v = frac_iter(f, -self.s, _tower_from_log(f.params, y))
        return self.gamma * log_value(f.params, v)

    def p(self, x: float) -> float:
        return math.exp(self.log_p(math.log(x)))

    def __call__(self, t: float) -> float:
        return eval_gauge(self, t)


def eval_gauge(g: GaugeSpec, t: float) -> float:
    if not 0.0 < t <= g.t0:
        raise DomainError(f"t={t} outside (0, {g.t0}]")
    if g.kind == "power":
        return t**g.s
    return t / math.exp(g.log_p(-math.log(t)))


def gauge_shape_ok(g: GaugeSpec, ts) -> dict:
    """h increasing with h(0+) = 0, and t p(1/t) increasing, on the grid ts (ascending)."""
    ts = np.asarray(sorted(ts), dtype=float)
    hs = np.array([eval_gauge(g, t) for t in ts])
    q = np.array([t * math.exp(g.log_p(-math.log(t))) for t in ts])
    return {
        "h_increasing": bool(np.all(np.diff(hs) > 0)),
        "h_small_at_zero": bool(hs[0] < hs[-1] * 1e-3 or hs[0] < 1e-6),
        "tp_increasing": bool(np.all(np.diff(q) > 0)),
    }


@dataclass(frozen=True)
class GaugeProfile:
    """Width profile psi: "fraciter" -> L^eps, "logquot" -> t / (ln t)^eps."""

    kind: str
    eps: float
    x_min: float = math.e
    schroeder: SchroederFn | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("fraciter", "logquot"):
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if self.kind == "fraciter" and self.schroeder is None:
            raise DomainError("L^eps profile needs a Schroeder function")

    @classmethod
    def frac_iter_width(cls, f: SchroederFn, eps: float) -> "GaugeProfile":
        return cls("fraciter", eps, x_min=f.params.beta, schroeder=f)

    @classmethod
    def log_quotient_width(cls, eps: float) -> "GaugeProfile":
        return cls("logquot", eps, x_min=math.e)

    def log_psi(self, p: Params, x) -> float:
        """ln psi(x) for a float or tower argument."""
        if self.kind == "fraciter":
            return log_value(p, frac_iter(self.schroeder, -self.eps, x))
        lx = _log_of(p, x)
        if lx <= 0:
            raise DomainError("t/(log t)^eps needs t > 1")
        return lx - self.eps * math.log(lx)

    def log_psi_ratio(self, p: Params, x) -> float:
        """ln(psi(x)/x), kept accurate when ln x itself is astronomically large."""
        lx = _log_of(p, x)
        if self.kind == "logquot":
            if lx <= 0:
                raise DomainError("t/(log t)^eps needs t > 1")
            return -self.eps * math.log(lx)
        return self.log_psi(p, x) - lx

    def log_psi_of_log(self, y: float) -> float:
        """ln psi(e^y)."""
        if self.kind == "fraciter":
            f = self.schroeder
            return log_value(f.params, frac_iter(f, -self.eps, _tower_from_log(f.params, y)))
        if y <= 0:
            raise DomainError("t/(log t)^eps needs t > 1")
        return y - self.eps * math.log(y)

    def __call__(self, x: float) -> float:
        p = self.schroeder.params if self.schroeder else None
        return math.exp(self.log_psi(p, x))

    def hypotheses(self, xs) -> dict:
        """Increasing, unbounded-looking, o(x) and doubling constant on the grid."""
        xs = np.asarray(sorted(xs), dtype=float)
        lp = np.array([self.log_psi_of_log(math.log(x)) for x in xs])
        l2 = np.array([self.log_psi_of_log(math.log(2 * x)) for x in xs])
        ratio = lp - np.log(xs)
        return {
            "increasing": bool(np.all(np.diff(lp) > 0)),
            "ratio_decreasing": bool(np.all(np.diff(ratio) < 0)),
            "final_ratio": float(math.exp(ratio[-1])),
            "doubling": float(np.max(np.exp(l2 - lp))),
        }


@dataclass(frozen=True)
class PredicateReport:
    rows: tuple[tuple[float, float, float, float], ...]
    t_star: float | None
    first_failure: float | None

    @property
    def holds(self) -> bool:
        return self.t_star is not None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "lhs", "rhs", "margin"])
            for row in self.rows:
                w.writerow([f"{v:.17g}" for v in row])


def log_grid(t_lo: float, t_hi: float, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    """ln t on a geometric grid; bounds may be given up to the float limit."""
    a, b = math.log(t_lo), math.log(t_hi)
    n = max(2, int(round((b - a) / math.log(10) * per_decade)) + 1)
    return np.linspace(a, b, n)


def _report(ys, lhs, rhs, sense: str, rel_tol: float) -> PredicateReport:
    """Rows (t, lhs, rhs, margin) with margin = ln(rhs/lhs) for "<=", ln(lhs/rhs) for ">="."""
    rows, ok = [], []
    for y, a, b in zip(ys, lhs, rhs):
        margin = b - a if sense == "<=" else a - b
        rows.append((_exp(y), _exp(a), _exp(b), margin))
        # equality cases are decided up to rounding of the logarithms
        ok.append(margin >= -rel_tol * max(1.0, abs(a), abs(b)))
    first_fail = next((rows[i][0] for i, v in enumerate(ok) if not v), None)
    # t* = first grid point from which the inequality holds to the top of the range
    t_star = None
    for i in range(len(ok) - 1, -1, -1):
        if not ok[i]:
            break
        t_star = rows[i][0]
    return PredicateReport(tuple(rows), t_star, first_fail)


def _exp(v: float) -> float:
    return math.exp(v) if v < 709 else math.inf


def check_condp(g: GaugeSpec, psi: GaugeProfile, delta: float, t_range, rel_tol: float = 1e-12) -> PredicateReport:
    """p(t (log t)^{1+delta} / psi(t)) <= psi(log t), compared as logarithms."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    ys = log_grid(*t_range)
    lhs = [g.log_p(y + (1 + delta) * math.log(y) - psi.log_psi_of_log(y)) for y in ys]
    rhs = [psi.log_psi_of_log(math.log(y)) for y in ys]
    return _report(ys, lhs, rhs, "<=", rel_tol)


def check_condp2(g: GaugeSpec, psi: GaugeProfile, delta: float, t_range, rel_tol: float = 1e-12) -> PredicateReport:
    """p(t log t / psi(t)) >= (log t)^{1+delta}, compared as logarithms."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    ys = log_grid(*t_range)
    lhs = [g.log_p(y + math.log(y) - psi.log_psi_of_log(y)) for y in ys]
    rhs = [(1 + delta) * math.log(y) for y in ys]
    return _report(ys, lhs, rhs, ">=", rel_tol)
