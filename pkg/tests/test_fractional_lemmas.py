"""Inequalities for real fractional iterates L^r = E^{-r}."""
import math

import numpy as np
import pytest

from hairlab.schroeder import frac_iter_float

RS = (0.3, 1.0, 2.5)


def second_differences(xs, ys):
    out = []
    for i in range(len(xs) - 2):
        x0, x1, x2 = xs[i : i + 3]
        y0, y1, y2 = ys[i : i + 3]
        d = ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0)
        scale = max(abs(y0), abs(y1), abs(y2)) / (x2 - x0) ** 2
        out.append(d / scale)
    return out


@pytest.mark.parametrize("r", [0.25, 0.5, 1.0, 2.5])
def test_concave(S25, p25, r):
    xs = np.geomspace(p25.alpha + 0.1, 1e12, 240)
    ys = [frac_iter_float(S25, -r, x) for x in xs]
    assert max(second_differences(xs, ys)) <= 1e-9


@pytest.mark.parametrize("c", [2.0, 10.0, 100.0])
@pytest.mark.parametrize("r", RS)
def test_subhomogeneous_beyond_beta(S25, p25, c, r):
    for x in np.geomspace(p25.beta, 1e10, 200):
        assert frac_iter_float(S25, -r, c * x) < c * frac_iter_float(S25, -r, x)


def test_subhomogeneous_fails_near_alpha(p25):
    # L(2 alpha) = alpha + ln 2 exceeds 2 alpha because alpha < ln 2
    assert p25.L(2 * p25.alpha) > 2 * p25.alpha
    assert p25.alpha < math.log(2)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_ratio_decreases_to_zero(S25, p25, r):
    xs = np.geomspace(p25.beta, 1e12, 200)
    q = [frac_iter_float(S25, -r, x) / x for x in xs]
    assert all(b <= a for a, b in zip(q, q[1:]))
    assert q[-1] <= 1e-3


@pytest.mark.parametrize("s,r", [(1.0, 0.5), (2.0, 1.0), (1.5, 0.25)])
@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_deeper_iterate_power_is_negligible(S25, p25, s, r, gamma):
    xs = np.geomspace(p25.beta, 1e12, 200)
    q = [frac_iter_float(S25, -s, x) ** gamma / frac_iter_float(S25, -r, x) for x in xs]
    ups = [i for i in range(1, len(q)) if q[i] > q[i - 1]]
    start = ups[-1] if ups else 0
    assert start < len(xs) // 2, "decrease should set in on the lower half of the grid"
    assert q[-1] < q[start]
