"""Acceptance criteria 1-12, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import cmath
import hashlib
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from hairlab import find_fixed_points
from hairlab.covering import gauge_box_count, vitali_select
from hairlab.gauge import GaugeProfile, GaugeSpec, check_condp, check_condp2
from hairlab.hairs import Bounded, Itinerary, Periodic, trace_hair_point, zeros
from hairlab.measure import build_cell_tree, check_ku_inequalities, sample_points
from hairlab.render import Window, render_escape
from hairlab.schroeder import build_schroeder, frac_iter, frac_iter_float
from hairlab.tower import rel_diff, tower

RESULTS: dict[int, str] = {}
P25 = find_fixed_points(0.25)
ITINERARIES = {
    "all-zeros": zeros(),
    "(1,0,0,...)": Itinerary((1,), Periodic((0,))),
    "Periodic((2,-1))": Itinerary((), Periodic((2, -1))),
    "Bounded(3,7)": Itinerary((), Bounded(3, 7)),
}


def record(n: int, ok: bool, detail: str) -> bool:
    line = f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def _best_time(fn, repeats=5):
    best = math.inf
    out = None
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return out, best


def criterion_1():
    worst_res, worst_t = 0.0, 0.0
    for lam in (0.1, 0.25, 0.35):
        p, dt = _best_time(lambda: find_fixed_points(lam))
        worst_t = max(worst_t, dt)
        for x in (p.alpha, p.beta):
            worst_res = max(worst_res, abs(lam * math.exp(x) - x) / max(1.0, x))
    ok = worst_res <= 1e-13 and worst_t < 1e-3
    return record(1, ok, f"max scaled residual {worst_res:.2e} (<= 1e-13), max time {worst_t * 1e3:.3f} ms (< 1 ms)")


def criterion_2():
    t = time.perf_counter()
    f = build_schroeder(P25)
    dt = time.perf_counter() - t
    worst = 0.0
    for r in np.linspace(0.0, f.radius, 20):
        for th in np.linspace(0.0, 2 * math.pi, 20, endpoint=False):
            z = r * cmath.exp(1j * th)
            worst = max(worst, abs(f.series(P25.beta * z) - P25.lam * cmath.exp(f.series(z))))
    agree = f.validation["max_disagreement"]
    nonneg = all(c >= 0 for c in f.coeffs)
    ok = worst <= 1e-9 and agree <= 1e-9 and f.validation["probes"] == 20 and nonneg and dt < 1.0
    return record(2, ok, f"sup |S(bz)-E(S(z))| = {worst:.2e} over 400 points, series vs limit {agree:.2e}, "
                         f"coefficients >= 0: {nonneg}, build {dt:.3f} s")


def criterion_3():
    f = build_schroeder(P25)
    xs = np.geomspace(P25.beta, 1e12, 300)
    t = time.perf_counter()
    worst = 0.0
    for x in xs:
        e1 = tower(P25, P25.E(x)) if x < 700 else frac_iter(f, 1.0, x)
        worst = max(worst, rel_diff(P25, frac_iter(f, 0.5, frac_iter(f, 0.5, x)), e1))
        worst = max(worst, rel_diff(P25, frac_iter(f, 0.3, frac_iter(f, 0.7, x)), e1))
    dt = time.perf_counter() - t
    ok = worst <= 1e-8 and dt < 1.0
    return record(3, ok, f"max relative error {worst:.2e} (<= 1e-8) on 300 points in [beta, 1e12], {dt:.3f} s")


def _second_diffs(xs, ys):
    out = []
    for i in range(len(xs) - 2):
        (x0, x1, x2), (y0, y1, y2) = xs[i:i + 3], ys[i:i + 3]
        d = ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0)
        out.append(d / (max(abs(y0), abs(y1), abs(y2)) / (x2 - x0) ** 2))
    return out


def criterion_4():
    f = build_schroeder(P25)
    conc_viol = 0
    for r in (0.25, 0.5, 1.0, 2.5):
        xs = np.geomspace(P25.alpha + 0.1, 1e12, 64 * 12)
        conc_viol += sum(d > 1e-9 for d in _second_diffs(xs, [frac_iter_float(f, -r, x) for x in xs]))
    sub_viol, first = 0, None
    xs = np.geomspace(P25.alpha, 1e10, 64 * 11)
    for c in (2.0, 10.0, 100.0):
        for r in (0.3, 1.0, 2.5):
            for x in xs:
                if not frac_iter_float(f, -r, c * x) < c * frac_iter_float(f, -r, x):
                    sub_viol += 1
                    first = first or (c, r, float(x))
    ok = conc_viol == 0 and sub_viol == 0
    return record(4, ok, f"concavity violations {conc_viol}; L^r(cx) < cL^r(x) violations {sub_viol}"
                         + (f" (first c={first[0]:g}, r={first[1]:g}, x={first[2]:.4g})" if first else ""))


def criterion_5():
    t = time.perf_counter()
    worst = math.inf
    for s in ITINERARIES.values():
        for u in (3.0, 4.0, 6.0):
            for n in range(13):
                worst = min(worst, *trace_hair_point(P25, s, u, n).sandwich_slack())
    dt = time.perf_counter() - t
    ok = worst >= 0.0 and dt < 5.0
    return record(5, ok, f"min log-domain slack {worst:.3e} (>= 0) over 4 itineraries x 3 u x n <= 12, {dt:.2f} s")


def criterion_6():
    worst = 0.0
    for s in ITINERARIES.values():
        for u in (3.0, 4.0, 6.0):
            for n in range(1, 13):
                a = trace_hair_point(P25, s, u, n).z
                b = trace_hair_point(P25, s.shift(), P25.E(u), n - 1).z
                worst = max(worst, abs(P25.lam * cmath.exp(a) - b) / abs(b))
    return record(6, worst <= 1e-9, f"max relative error {worst:.2e} (<= 1e-9)")


def criterion_7():
    # at u in {3,4,6} successive depths agree to the last bit from n ~ 3 on; 2.2 shows the decay
    worst_factor, bad = math.inf, []
    for name, s in ITINERARIES.items():
        d = {}
        for n in range(4, 12):
            d[n] = max(abs(trace_hair_point(P25, s, u, n + 1).z - trace_hair_point(P25, s, u, n).z)
                       for u in (2.2, 3.0, 4.0, 6.0))
        for n in range(4, 10):
            if d[n + 1] == 0.0:
                continue
            fac = d[n] / d[n + 1]
            worst_factor = min(worst_factor, fac)
            if fac < 2.0:
                bad.append((name, n))
    ok = not bad
    shown = "all steps at double resolution" if math.isinf(worst_factor) else f"{worst_factor:.3g}"
    return record(7, ok, f"smallest per-step decrease factor {shown} (guard >= 2; nominal 5), failures {bad}")


def criterion_8():
    f = build_schroeder(P25)
    eps, d = 1.0, 0.1
    logq = GaugeProfile.log_quotient_width(eps)
    rng = (3.0, 1e12)
    a = check_condp(GaugeSpec.power(1 + 1 / (1 + 2 * d + eps)), logq, d, rng)
    b = check_condp2(GaugeSpec.power(1 + (1 + d) / (1 + eps)), logq, d, rng)
    c = check_condp2(GaugeSpec.log_power(2.0), GaugeProfile.frac_iter_width(f, 0.5), 0.5, rng)
    oks = [r.holds and r.t_star <= 1e4 for r in (a, b, c)]

    def show(r):
        return f"t*={r.t_star:.3g}" if r.holds else f"no t* (first failure {r.first_failure:.3g})"

    return record(8, all(oks), f"(a) {show(a)} {'ok' if oks[0] else 'FAIL'}; (b) {show(b)} "
                               f"{'ok' if oks[1] else 'FAIL'}; (c) {show(c)} {'ok' if oks[2] else 'FAIL'}")


def criterion_9():
    t = time.perf_counter()
    pts = sample_points(P25, GaugeProfile.log_quotient_width(1.0), 100_000, depth=3, seed=0)
    bc = gauge_box_count(pts, GaugeSpec.power(1.5), [2.0**-k for k in range(4, 15)])
    dt = time.perf_counter() - t
    ok = abs(bc.dimension - 1.5) <= 0.15 and dt < 60.0
    lo, hi = bc.band
    return record(9, ok, f"box dimension {bc.dimension:.3f} [{lo:.3f}, {hi:.3f}] vs 1.5 +- 0.15, "
                         f"1e5 points, {dt:.1f} s")


def criterion_10():
    tree = build_cell_tree(P25, GaugeProfile.log_quotient_width(1.0), max_depth=3, max_cells=20000)
    mass = max(r.share_sum_error for r in tree.reports)
    ratio_pi = all(c.log_ratio_R == math.pi for cells in tree.levels[1:] for c in cells)
    ku = check_ku_inequalities(tree)
    st = ku.stable(2, 3, 0.2)
    c2, c3 = ku.c1_range[2], ku.c1_range[3]
    c1_ok = all(math.isfinite(v) for v in c2 + c3) and all(abs(b / a - 1) <= 0.2 for a, b in zip(c2, c3))
    ok = mass <= 1e-9 and ratio_pi and st["eta_positive"] and st["eta_stable"] and st["M_finite"] \
        and st["M_stable"] and c1_ok
    etas = ", ".join(f"{v:.3f}" for v in ku.eta.values())
    return record(10, ok, f"share-sum error {mass:.1e}; ln R-ln r = pi: {ratio_pi}; eta {etas}; "
                          f"M {math.exp(ku.ln_M[2]):.3f}->{math.exp(ku.ln_M[3]):.3f}; "
                          f"c1 {c2[0]:.3f}..{c2[1]:.3f} -> {c3[0]:.3f}..{c3[1]:.3f}")


def _exact_disjoint(balls, sel):
    for i, a in enumerate(sel):
        (ax, ay), ar = balls[a]
        for b in sel[i + 1:]:
            (bx, by), br = balls[b]
            dx, dy = Fraction(ax) - Fraction(bx), Fraction(ay) - Fraction(by)
            s = Fraction(ar) + Fraction(br)
            if dx * dx + dy * dy <= s * s:
                return False
    return True


def _grid_cover(balls, sel, n=256):
    g = np.linspace(-0.2, 1.2, n)
    inside = np.zeros((n, n), dtype=bool)
    covered = np.zeros((n, n), dtype=bool)

    def paint(mask, cx, cy, r):
        i0, i1 = np.searchsorted(g, [cy - r, cy + r])
        j0, j1 = np.searchsorted(g, [cx - r, cx + r])
        yy, xx = np.meshgrid(g[i0:i1], g[j0:j1], indexing="ij")
        mask[i0:i1, j0:j1] |= (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r

    for (cx, cy), r in balls:
        paint(inside, cx, cy, r)
    for j in sel:
        (cx, cy), r = balls[j]
        paint(covered, cx, cy, 4 * r)
    return bool(np.all(covered[inside]))


def criterion_11():
    rng = random.Random(11)
    n_ok = 0
    for _ in range(1000):
        balls = [((rng.random(), rng.random()), rng.uniform(0.01, 0.1)) for _ in range(rng.randint(1, 200))]
        sel = vitali_select(balls)
        n_ok += _exact_disjoint(balls, sel) and _grid_cover(balls, sel)
    return record(11, n_ok == 1000, f"{n_ok}/1000 instances disjoint (exact) and 4r-covered (256^2 grid)")


def criterion_12():
    win = Window(-1.0, 12.0, -8.0, 8.0)
    t = time.perf_counter()
    img = render_escape(P25, win, 800, 600, 64)
    dt = time.perf_counter() - t
    digests = {hashlib.sha256(render_escape(P25, win, 800, 600, 64, threads=k).tobytes()).hexdigest()
               for k in (1, 2, 4)}
    digests.add(hashlib.sha256(img.tobytes()).hexdigest())
    xs = win.x_min + (np.arange(800) + 0.5) * (win.x_max - win.x_min) / 800
    left = img[:, xs < P25.beta, 0]
    fatou = bool(left.size) and bool(np.all(left < 128))
    ok = len(digests) == 1 and fatou and dt < 10.0
    return record(12, ok, f"identical bytes across runs/threads: {len(digests) == 1}; Re < beta all Fatou: {fatou}; "
                          f"800x600 in {dt:.2f} s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 13)])
def test_criterion(crit):
    assert crit(), RESULTS[int(crit.__name__.split("_")[1])]


if __name__ == "__main__":
    for c in CRITERIA:
        c()
    print(f"{sum('PASS' in v for v in RESULTS.values())}/{len(RESULTS)} criteria pass")
