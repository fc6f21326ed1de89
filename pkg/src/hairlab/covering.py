"""Grid box counting with a gauge, and greedy disjoint ball selection."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import linregress

from .errors import DomainError
from .gauge import GaugeSpec, eval_gauge

Z95 = 1.96


def _as_xy(points) -> np.ndarray:
    a = np.asarray(points)
    if np.iscomplexobj(a):
        return np.column_stack([a.real, a.imag]).astype(float)
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise DomainError("points must be complex or an (n, 2) array")
    return a


@dataclass(frozen=True)
class BoxCount:
    scales: tuple[float, ...]
    counts: tuple[int, ...]
    curve: tuple[float, ...]      # N(delta) h(delta)
    dimension: float
    stderr: float
    intercept: float

    @property
    def band(self) -> tuple[float, float]:
        return self.dimension - Z95 * self.stderr, self.dimension + Z95 * self.stderr

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta", "count", "gauge_sum"])
            for d, n, c in zip(self.scales, self.counts, self.curve):
                w.writerow([f"{d:.17g}", n, f"{c:.17g}"])


def box_counts(xy: np.ndarray, scales) -> list[int]:
    out = []
    for d in scales:
        cells = np.floor(xy / d).astype(np.int64)
        out.append(int(np.unique(cells, axis=0).shape[0]))
    return out


def gauge_box_count(points, g: GaugeSpec, scales) -> BoxCount:
    """Sum of h(delta) over occupied delta-grid squares, and the slope of
    ln N(delta) against ln(1/delta)."""
    scales = [float(d) for d in scales]
    if len(scales) < 3:
        raise DomainError("need at least three scales")
    if any(d <= 0 for d in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise DomainError("scales must be positive and strictly decreasing")
    xy = _as_xy(points)
    if xy.shape[0] == 0:
        raise DomainError("empty point set")
    counts = box_counts(xy, scales)
    curve = []
    for d, n in zip(scales, counts):
        # sqrt(2) delta is the diameter of a grid square
        curve.append(n * eval_gauge(g, math.sqrt(2) * d) if math.sqrt(2) * d <= g.t0 else math.nan)
    fit = linregress(-np.log(scales), np.log(counts))
    return BoxCount(tuple(scales), tuple(counts), tuple(curve), float(fit.slope), float(fit.stderr),
                    float(fit.intercept))


def _exact(x: float) -> Fraction:
    if not math.isfinite(x):
        raise DomainError(f"non-finite coordinate {x}")
    return Fraction(x)


@dataclass(frozen=True)
class Ball:
    x: float
    y: float
    r: float


def _balls(balls) -> list[Ball]:
    out = []
    for b in balls:
        c, r = b
        if isinstance(c, complex):
            x, y = c.real, c.imag
        else:
            x, y = c
        if not r > 0:
            raise DomainError(f"radius must be positive, got {r}")
        out.append(Ball(float(x), float(y), float(r)))
    return out


def overlap(a: Ball, b: Ball) -> bool:
    """Closed disks intersect, decided in exact rational arithmetic near tangency."""
    d2 = (a.x - b.x) ** 2 + (a.y - b.y) ** 2
    s2 = (a.r + b.r) ** 2
    if d2 < s2 * (1 - 1e-9):
        return True
    if d2 > s2 * (1 + 1e-9):
        return False
    dx, dy = _exact(a.x) - _exact(b.x), _exact(a.y) - _exact(b.y)
    s = _exact(a.r) + _exact(b.r)
    return dx * dx + dy * dy <= s * s


def vitali_select(balls) -> list[int]:
    """Indices of a greedy disjoint subfamily, taken in decreasing radius.

    Every input ball meets a selected ball at least as large, so the
    selected balls enlarged four times cover the union of the input.
    """
    bs = _balls(balls)
    order = sorted(range(len(bs)), key=lambda i: (-bs[i].r, i))
    chosen: list[int] = []
    for i in order:
        if not any(overlap(bs[i], bs[j]) for j in chosen):
            chosen.append(i)
    return chosen


def check_vitali(balls, selected) -> dict:
    """Pairwise disjointness of the selection and the witness property."""
    bs = _balls(balls)
    sel = [bs[j] for j in selected]
    disjoint = all(not overlap(a, b) for k, a in enumerate(sel) for b in sel[k + 1:])
    witnessed = all(any(overlap(b, s) and s.r >= b.r for s in sel) for b in bs)
    return {"disjoint": disjoint, "witnessed": witnessed}
