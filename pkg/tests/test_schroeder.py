import cmath
import csv
import math

import numpy as np
import pytest

from hairlab import DomainError, find_fixed_points
from hairlab.schroeder import (
    build_schroeder,
    eval_S,
    eval_S_inverse,
    frac_iter,
    frac_iter_float,
    limit_formula_adaptive,
    write_coefficients,
)
from hairlab.tower import rel_diff, to_float, tower, tower_exp

from .oracles import bisect_root, mp_schroeder, sympy_low_coefficients


def test_normalization_and_signs(S25, p25):
    assert S25.coeffs[0] == p25.beta
    assert S25.coeffs[1] == 1.0
    assert all(c >= 0 for c in S25.coeffs)


@pytest.mark.parametrize("lam", [0.1, 0.25, 0.35])
def test_low_coefficients_symbolic(lam):
    p = find_fixed_points(lam)
    f = build_schroeder(p)
    b, exprs = sympy_low_coefficients(4)
    for k, e in enumerate(exprs, start=2):
        assert f.coeffs[k] == pytest.approx(float(e.subs(b, p.beta)), rel=1e-13)


def test_series_matches_multiprecision_limit(S25):
    for z in (0.3, -1.1, 1.5 + 0.5j, -0.7j):
        assert complex(S25.series(z)) == pytest.approx(complex(mp_schroeder(0.25, z)), rel=1e-12)


@pytest.mark.parametrize("lam", [0.1, 0.25, 0.35])
def test_functional_equation_disk(lam):
    p = find_fixed_points(lam)
    f = build_schroeder(p)
    worst = 0.0
    for r in np.linspace(0, f.radius, 20):
        for th in np.linspace(0, 2 * math.pi, 20, endpoint=False):
            z = r * cmath.exp(1j * th)
            lhs = f.series(p.beta * z)
            rhs = p.lam * cmath.exp(f.series(z))
            worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-9


def test_limit_formula_adaptive_settles(p25):
    v, n = limit_formula_adaptive(p25.beta, 0.5)
    assert v.real == pytest.approx(float(mp_schroeder(0.25, 0.5)), rel=1e-12)
    assert n >= 8


def test_eval_S_examples(S25, p25):
    assert to_float(p25, eval_S(S25, 0.0)) == p25.beta
    for t in np.linspace(-5, 5, 21):
        a = eval_S(S25, p25.beta * t)
        b = tower_exp(p25, eval_S(S25, t))
        assert rel_diff(p25, a, b) <= 1e-9


def test_eval_S_far_left(S25, p25):
    # decay towards alpha is algebraic: S(x) - alpha ~ |x|^(ln alpha / ln beta)
    assert to_float(p25, eval_S(S25, -50.0)) == pytest.approx(float(mp_schroeder(0.25, -50.0)), rel=1e-10)
    assert abs(to_float(p25, eval_S(S25, -1e6)) - p25.alpha) < 1e-2
    assert abs(to_float(p25, eval_S(S25, -1e12)) - p25.alpha) < 1e-3


def test_eval_S_large_is_tower(S25, p25):
    t = eval_S(S25, 30.0)
    assert t.level >= 3
    # S(30) = E^k(S(30 / beta^k)) for any k
    k = 4
    inner = tower(p25, float(mp_schroeder(0.25, 30.0 / p25.beta**k)))
    for _ in range(k):
        inner = tower_exp(p25, inner)
    assert rel_diff(p25, t, inner) <= 1e-12


def test_eval_S_monotone(S25, p25):
    xs = np.linspace(-40, 40, 400)
    ts = [eval_S(S25, x) for x in xs]
    assert all(a < b for a, b in zip(ts, ts[1:]))


def test_inverse_examples(S25, p25):
    assert eval_S_inverse(S25, p25.beta) == 0.0
    y = tower_exp(p25, eval_S(S25, 1.0))
    assert eval_S_inverse(S25, y) == pytest.approx(p25.beta, rel=1e-12)
    x10 = bisect_root(lambda x: to_float(p25, eval_S(S25, x)) - 10.0, 0.0, 5.0, tol=1e-14)
    assert eval_S_inverse(S25, 10.0) == pytest.approx(x10, rel=1e-12)
    with pytest.raises(DomainError):
        eval_S_inverse(S25, 0.3)


def test_inverse_round_trip(S25, p25):
    for y in np.geomspace(p25.alpha + 1e-3, 1e200, 200):
        t = tower(p25, y)
        back = eval_S(S25, eval_S_inverse(S25, t))
        assert rel_diff(p25, back, t) <= 1e-9


def test_frac_iter_integer_orders(S25, p25):
    for x in np.geomspace(p25.alpha + 0.01, 1e12, 60):
        assert rel_diff(p25, frac_iter(S25, 1, x), tower_exp(p25, tower(p25, x))) <= 1e-9
        assert frac_iter_float(S25, -1, x) == pytest.approx(p25.L(x), rel=1e-9)
        if p25.L(x) > p25.alpha:
            assert frac_iter_float(S25, -2, x) == pytest.approx(p25.L(p25.L(x)), rel=1e-9)


def test_frac_iter_fixed_alpha_and_domain(S25, p25):
    assert frac_iter_float(S25, 0.7, p25.alpha) == p25.alpha
    with pytest.raises(DomainError):
        frac_iter(S25, 0.5, 0.1)


def test_half_iterate_order(S25, p25):
    v = frac_iter_float(S25, -0.5, 1e6)
    assert p25.L(1e6) < v < 1e6


def test_semigroup_grid(S25, p25):
    pairs = [(0.5, 0.5), (0.3, 0.7), (0.25, -0.5), (-0.25, 1.0), (1.0, -0.5), (-0.5, -0.25)]
    for x in np.geomspace(p25.beta, 1e12, 80):
        for r, s in pairs:
            a = frac_iter(S25, r, frac_iter(S25, s, x))
            b = frac_iter(S25, r + s, x)
            assert rel_diff(p25, a, b) <= 1e-8


def test_coefficient_dump(S25, tmp_path):
    path = tmp_path / "c.csv"
    write_coefficients(S25, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["index", "coefficient"]
    assert float(rows[1][1]) == S25.coeffs[0]
    assert len(rows) == len(S25.coeffs) + 1
