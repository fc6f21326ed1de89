"""Nested cells K_n over pi-squares, the area-split probability measure on them,
and empirical versions of the growth/derivative/measure estimates they satisfy.

Geometry.  A square of the family has left edge a = beta + (l-1) pi and
imaginary centre 2 pi k.  Its image under E is a half-annulus with inner
radius r = E(a) and outer radius e^pi r.  A child is any square inside
{2r < Re < 2R/3, |Im| < psi(r)}; its cell is the pull-back along the chain.

Scaling.  At level n positions are stored relative to r_n: q = Re/r and
v = Im/r.  Sibling areas are  integral_B |w|^-2 |L(w)|^-2 ; the remaining
derivative factors vary across siblings by less than 1e-40 once r >= 50.
Small sibling families are enumerated with 3x3 Gauss-Legendre per square.
Large ones use the continuum limit (one square per pi x 2pi cell), whose
relative error is O((pi/r)^2).

Log-measure bookkeeping.  ln mu(K_n) = sum_i ln share_i with
ln share_i = -ln r_i - ln Y_i + small_i, where Y_i = 2 pi K_i + pi ~ psi(r_i).
``ku2_term`` keeps  ln share_i + ln r_i + ln psi(r_i)  in O(1) arithmetic,
since at depth 3 ln r alone is ~1e43 and would swamp it.
"""
from __future__ import annotations

import csv
import functools
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Params
from .errors import DomainError, ResolutionError
from .gauge import GaugeProfile, GaugeSpec
from .tower import TowerReal, log_value, tower, tower_exp, tower_scale

ENUM_LIMIT = 200_000
TWO_PI = 2.0 * math.pi
Q_HI = 2.0 * math.exp(math.pi) / 3.0


@functools.lru_cache(maxsize=None)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


_GL3 = _gl(3)


def _lse(xs) -> float:
    xs = [x for x in xs if x != -math.inf]
    if not xs:
        return -math.inf
    m = max(xs)
    return m + math.log(sum(math.exp(x - m) for x in xs))


def _inv(log_r: float) -> float:
    return math.exp(-log_r) if log_r < 700 else 0.0


@dataclass(frozen=True)
class Cell:
    """One K_n.  The root keeps its left edge in ``q`` and Im centre in ``v``."""

    depth: int
    parent: int
    q: float
    v: float
    k: int | None
    log_r: float
    log_psi_r: float      # ln(psi(r_n) / r_n)
    ln_share: float
    ku2_term: float
    ln_mu: float
    col: int = 0

    @property
    def log_ratio_R(self) -> float:
        """ln R_n - ln r_n; the half-annulus always spans e^pi."""
        return math.pi


@dataclass(frozen=True)
class Family:
    """The children region of one parent, in scaled coordinates."""

    log_r: float
    log_psi_r: float      # ln(psi(r)/r)
    K: float              # rows k = -K..K
    log_V: float          # ln(Y/r), Y = 2 pi K + pi
    psi_over_Y: float     # ln(psi/Y), O(1/psi)
    log_Y: float
    qA: float
    qB: float
    rho_ref: float        # ln r - ln lam (= parent left edge); inf for the root's children
    v_parent: float       # Im(parent centre) / rho_ref
    enumerated: bool
    n_cols: float
    log_count: float

    @property
    def V(self) -> float:
        return math.exp(self.log_V) if self.log_V > -745 else 0.0

    @property
    def log_psi(self) -> float:
        return self.log_r + self.log_psi_r


@dataclass
class LevelReport:
    n_parents: int
    log_children_total: float
    n_retained: int
    ln_retained_mass: float
    share_sum_error: float
    mass_ratio: float


@dataclass
class CellTree:
    params: Params
    profile: GaugeProfile
    root: Cell
    levels: list[list[Cell]]
    reports: list[LevelReport] = field(default_factory=list)
    mass_budget: float = 1.0

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def chain(self, n: int, i: int) -> list[Cell]:
        out = []
        while n >= 0:
            c = self.levels[n][i]
            out.append(c)
            i = c.parent
            n -= 1
        return out[::-1]

    def pruned_mass(self, n: int) -> float:
        """Mass of the level-n cells that were not retained (absolute)."""
        return -math.expm1(self.reports[n - 1].ln_retained_mass) if n else 0.0

    def within_budget(self) -> bool:
        return all(self.pruned_mass(n) <= self.mass_budget for n in range(1, self.depth + 1))

    def write_csv(self, path) -> None:
        p = self.params
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["depth", "center_re", "center_im", "r", "R", "ln_weight"])
            for n, cells in enumerate(self.levels):
                for i, c in enumerate(cells):
                    re, im = square_center(self, n, i)
                    r = radius(self, n, i)
                    rs = str(r) if r is not None else ""
                    big = str(tower_scale(p, r, math.exp(math.pi))) if r is not None else ""
                    w.writerow([n, re, im, rs, big, f"{c.ln_mu:.17g}"])


def _left_edge_tower(p: Params, cell: Cell) -> TowerReal:
    if cell.depth == 0:
        return tower(p, cell.q)
    if cell.log_r < 700:
        return tower(p, cell.q * math.exp(cell.log_r))
    # a = q r with r = E(a_prev) is E(a_prev + ln q)
    return tower_exp(p, tower(p, cell.log_r - p.log_lam + math.log(cell.q)))


def radius(tree: CellTree, n: int, i: int) -> TowerReal | None:
    """r_n of the cell as a tower."""
    if n == 0:
        return None
    parent = tree.levels[n - 1][tree.levels[n][i].parent]
    return tower_exp(tree.params, _left_edge_tower(tree.params, parent))


def square_center(tree: CellTree, n: int, i: int) -> tuple[str, str]:
    """Centre of B_n as strings (towers when huge)."""
    c = tree.levels[n][i]
    if n == 0:
        return f"{c.q + math.pi / 2:.17g}", f"{c.v:.17g}"
    re = _left_edge_tower(tree.params, c)
    im = f"{TWO_PI * c.k:.17g}" if c.k is not None else f"{c.v:.17g}*r"
    if re.level == 0:
        return f"{re.mantissa + math.pi / 2:.17g}", im
    return str(re), im


def _im_centre(cell: Cell) -> float:
    if cell.depth == 0:
        return cell.v
    if cell.k is not None:
        return TWO_PI * cell.k
    return cell.v * math.exp(cell.log_r) if cell.log_r < 700 else math.inf


def _family(p: Params, psi: GaugeProfile, parent: Cell) -> Family | None:
    r = tower_exp(p, _left_edge_tower(p, parent))
    log_r = log_value(p, r)
    if not math.isfinite(log_r):
        raise ResolutionError(f"depth {parent.depth + 1}: ln r is beyond floats")
    log_psi_r = psi.log_psi_ratio(p, r)
    log_psi = psi.log_psi(p, r)
    if log_psi < math.log(1e15):
        psi_v = math.exp(log_psi)
        if psi_v <= math.pi / 2:
            return None
        K = float(math.ceil((psi_v - math.pi / 2) / TWO_PI) - 1)
        psi_over_Y = log_psi - math.log(TWO_PI * K + math.pi)
        log_rows = math.log(2 * K + 1)
    else:
        # |ln(Y/psi)| < 2/psi: below double resolution
        K = math.inf
        psi_over_Y = 0.0
        log_rows = log_psi - math.log(math.pi)
    if parent.depth == 0:
        rho_ref, v_par = math.inf, 0.0
    else:
        rho_ref = log_r - p.log_lam
        im = _im_centre(parent)
        v_par = im / rho_ref if math.isfinite(im) else 0.0
    if log_r < math.log(1e12):
        rv = math.exp(log_r)
        l_min = math.floor((2 * rv - p.beta) / math.pi) + 2
        l_max = math.floor((Q_HI * rv - p.beta) / math.pi)
        if l_max < l_min:
            return None
        n_cols = float(l_max - l_min + 1)
        qA = (p.beta + (l_min - 1) * math.pi) / rv
        qB = (p.beta + l_max * math.pi) / rv
        log_cols = math.log(n_cols)
    else:
        qA, qB = 2.0, Q_HI
        log_cols = math.log(Q_HI - 2.0) + log_r - math.log(math.pi)
        n_cols = math.exp(log_cols) if log_cols < 700 else math.inf
    log_count = log_cols + log_rows
    enumerated = log_r < math.log(1e12) and log_count <= math.log(ENUM_LIMIT)
    return Family(log_r, log_psi_r, K, log_psi_r - psi_over_Y, psi_over_Y, log_psi - psi_over_Y, qA, qB, rho_ref, v_par,
                  enumerated, n_cols, log_count)


def _lam_factor(fam: Family, q, v):
    """|L(w)| / rho_ref for w = r (q + i v); 1 for children of the root."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    if math.isinf(fam.rho_ref):
        return np.ones(np.broadcast(q, v).shape)
    re = 1.0 + 0.5 * np.log(q * q + v * v) / fam.rho_ref
    im = np.arctan2(v, q) / fam.rho_ref + fam.v_parent
    return np.hypot(re, im)


def continuum_J(fam: Family, nq: int = 48, ns: int = 24) -> float:
    """Integral over q in [qA,qB], s in [-1,1] of 1/((q^2 + V^2 s^2) Lambda^2)."""
    xq, wq = _gl(nq)
    xs, ws = _gl(ns)
    q = 0.5 * (fam.qB - fam.qA) * xq + 0.5 * (fam.qB + fam.qA)
    Q, S = np.meshgrid(q, xs, indexing="ij")
    v = fam.V * S
    lam = _lam_factor(fam, Q, v)
    f = 1.0 / ((Q * Q + v * v) * lam * lam)
    return float(0.5 * (fam.qB - fam.qA) * np.einsum("i,j,ij->", wq, ws, f))


def enumerate_children(p: Params, fam: Family):
    """(cols, ks, ln_f): ln of the Jacobian-area integral for every child square."""
    rv = math.exp(fam.log_r)
    a0 = fam.qA * rv
    cols = np.arange(int(fam.n_cols))
    ks = np.arange(-int(fam.K), int(fam.K) + 1)
    a = a0 + cols * math.pi
    x, wx = _GL3
    re = a[:, None, None, None] + 0.5 * math.pi * (1 + x)[None, None, :, None]
    im = TWO_PI * ks[None, :, None, None] + 0.5 * math.pi * x[None, None, None, :]
    re, im = np.broadcast_arrays(re, im)
    mod2 = re * re + im * im
    f = 1.0 / mod2
    if not math.isinf(fam.rho_ref):
        lre = 0.5 * np.log(mod2) - p.log_lam
        lim = np.arctan2(im, re) + fam.v_parent * fam.rho_ref
        f = f / (lre * lre + lim * lim)
    w2 = (0.5 * math.pi) ** 2 * wx[:, None] * wx[None, :]
    return cols, ks, np.log(np.einsum("abij,ij->ab", f, w2))


def _analytic_share(fam: Family, q: float, v: float, lnJ: float) -> tuple[float, float]:
    """(ln share, ku2 term) for a child centred at r (q + i v)."""
    lam = float(_lam_factor(fam, q, v))
    small = math.log(2 * math.pi**2) - math.log(q * q + v * v) - 2 * math.log(lam) - lnJ
    return -fam.log_r - fam.log_Y + small, small + fam.psi_over_Y


def _best_first(fam: Family, lnJ: float):
    """Children in decreasing weight, walking the (column, row) lattice outward."""
    inv = _inv(fam.log_r)
    step_q, step_v = math.pi * inv, TWO_PI * inv

    def centre(col, k):
        return fam.qA + (col + 0.5) * step_q, k * step_v

    def push(col, k):
        if col < fam.n_cols and abs(k) <= fam.K and (col, k) not in seen:
            seen.add((col, k))
            heapq.heappush(heap, (-_analytic_share(fam, *centre(col, k), lnJ)[0], col, abs(k), k))

    heap, seen = [], set()
    push(0, 0)
    while heap:
        _, col, _, k = heapq.heappop(heap)
        yield col, k, *centre(col, k)
        push(col + 1, k)
        if k >= 0:
            push(col, k + 1)
        if k <= 0:
            push(col, k - 1)


def _root_cell(p: Params, psi: GaugeProfile, z0: complex) -> Cell:
    z0 = complex(z0)
    l = math.floor((z0.real - p.beta) / math.pi) + 1
    k = round(z0.imag / TWO_PI)
    if l < 1 or abs(z0.imag - TWO_PI * k) > math.pi / 2:
        raise DomainError(f"{z0} does not lie in a square of the family")
    a = p.beta + (l - 1) * math.pi
    if not a > p.x0:
        raise DomainError(f"root square starts at {a:.6g}, not right of x0={p.x0:.6g}")
    if not abs(TWO_PI * k) + math.pi / 2 < math.exp(psi.log_psi(p, a)):
        raise DomainError("root square is not inside Omega_psi")
    return Cell(0, -1, a, TWO_PI * k, k, math.nan, math.nan, 0.0, 0.0, 0.0, col=l)


def default_root(p: Params) -> complex:
    """Centre of the first square lying right of x0 on the real axis."""
    l = math.floor((p.x0 - p.beta) / math.pi) + 2
    return complex(p.beta + (l - 0.5) * math.pi, 0.0)


def _children(p: Params, fam: Family):
    """(children, share-sum error); children is an iterator of
    (ln share, ku2, q_left, v, k, col) in decreasing weight."""
    if fam.enumerated:
        cols, ks, lnf = enumerate_children(p, fam)
        lnZ = float(np.logaddexp.reduce(lnf.ravel()))
        ls = lnf - lnZ
        err = abs(float(np.exp(ls).sum()) - 1.0)
        kk = np.broadcast_to(ks[None, :], ls.shape).ravel()
        cc = np.broadcast_to(cols[:, None], ls.shape).ravel()
        order = np.lexsort((kk, np.abs(kk), cc, -ls.ravel()))
        inv = _inv(fam.log_r)

        def gen():
            for idx in order:
                a, b = divmod(int(idx), len(ks))
                lsh = float(ls[a, b])
                yield (lsh, lsh + fam.log_r + fam.log_psi, fam.qA + int(cols[a]) * math.pi * inv,
                       TWO_PI * int(ks[b]) * inv, int(ks[b]), int(cols[a]))

        return gen(), err
    J = continuum_J(fam)
    err = abs(continuum_J(fam, 96, 48) / J - 1.0)
    lnJ = math.log(J)
    half = 0.5 * math.pi * _inv(fam.log_r)

    def gen():
        for col, k, q, v in _best_first(fam, lnJ):
            lsh, ku2 = _analytic_share(fam, q, v, lnJ)
            yield lsh, ku2, q - half, v, k, col

    return gen(), err


def build_cell_tree(p: Params, psi: GaugeProfile, z0: complex | None = None, max_depth: int = 3,
                    max_cells: int = 20_000, mass_budget: float = 1.0) -> CellTree:
    """Cells to ``max_depth``, keeping the ``max_cells`` heaviest per level."""
    if max_depth < 1:
        raise DomainError("max_depth must be >= 1")
    if max_cells < 1:
        raise DomainError("max_cells must be >= 1")
    root = _root_cell(p, psi, default_root(p) if z0 is None else z0)
    tree = CellTree(p, psi, root, [[root]], mass_budget=mass_budget)
    for n in range(1, max_depth + 1):
        parents = tree.levels[n - 1]
        order = sorted(range(len(parents)), key=lambda i: (-parents[i].ln_mu, i))
        best: list = []  # min-heap of (ln_mu, -seq, cell)
        seq, share_err = 0, 0.0
        log_total, mass_num, mass_den = [], [], []
        for i in order:
            par = parents[i]
            if len(best) >= max_cells and par.ln_mu <= best[0][0]:
                break
            fam = _family(p, psi, par)
            if fam is None:
                continue
            log_total.append(fam.log_count)
            kids, err = _children(p, fam)
            share_err = max(share_err, err)
            mass_num.append(par.ln_mu + math.log1p(err))
            mass_den.append(par.ln_mu)
            for taken, (lsh, ku2, q, v, k, col) in enumerate(kids):
                if taken >= max_cells:
                    break
                c = Cell(n, i, q, v, k, fam.log_r, fam.log_psi_r, lsh, ku2, par.ln_mu + lsh, col)
                item = (c.ln_mu, -seq, c)
                seq += 1
                if len(best) < max_cells:
                    heapq.heappush(best, item)
                elif item > best[0]:
                    heapq.heapreplace(best, item)
                else:
                    break
        if not best:
            raise ResolutionError(f"no children qualify at depth {n} (psi too narrow at this scale)")
        cells = [c for _, _, c in sorted(best, key=lambda t: (-t[0], -t[1]))]
        tree.levels.append(cells)
        ratio = math.exp(_lse(mass_num) - _lse(mass_den))
        tree.reports.append(LevelReport(len(parents), _lse(log_total), len(cells),
                                        _lse([c.ln_mu for c in cells]), share_err, ratio))
    return tree


# ---------------------------------------------------------------- rep points


@dataclass(frozen=True)
class ChainGeometry:
    """Rep point z; per level j = 1..n: ln x_j = ln(|E^j z| / r_j), E^j(z)/r_j and ln r_j."""

    z: complex
    log_x: tuple[float, ...]
    scaled: tuple[tuple[float, float], ...]
    log_r: tuple[float, ...]


def chain_geometry(tree: CellTree, n: int, i: int) -> ChainGeometry:
    """Pull the centre of B_n back through the chain, all in scaled coordinates."""
    cells = tree.chain(n, i)
    root = cells[0]
    if n == 0:
        return ChainGeometry(complex(root.q + math.pi / 2, root.v), (), (), ())
    top = cells[n]
    re_s, im_s = top.q + 0.5 * math.pi * _inv(top.log_r), top.v
    log_x, scaled, log_r = [], [], []
    for j in range(n, 0, -1):
        lx = 0.5 * math.log(re_s * re_s + im_s * im_s)
        ang = math.atan2(im_s, re_s)
        log_x.append(lx)
        scaled.append((re_s, im_s))
        log_r.append(cells[j].log_r)
        below = cells[j - 1]
        if j == 1:
            z = complex(below.q + lx, ang + below.v)
            break
        inv = _inv(below.log_r)
        # w_{j-1} = a_{j-1} + ln x_j + i (arg w_j + Im centre_{j-1})
        re_s = below.q + lx * inv
        im_s = below.v + ang * inv
    return ChainGeometry(z, tuple(log_x[::-1]), tuple(scaled[::-1]), tuple(log_r[::-1]))


# ---------------------------------------------------------------- KU checks


@dataclass
class KUReport:
    eta: dict[int, float]
    ln_M: dict[int, float]
    c1_range: dict[int, tuple[float, float]]
    ln_L: dict[int, float]
    log_ratio_R: float

    def stable(self, d1: int = 2, d2: int = 3, tol: float = 0.2) -> dict:
        etas = list(self.eta.values())
        M1, M2 = math.exp(self.ln_M[d1]), math.exp(self.ln_M[d2])
        L1, L2 = math.exp(self.ln_L[d1]), math.exp(self.ln_L[d2])
        return {
            "eta_positive": all(v > 0 for v in etas),
            "eta_stable": all(v > 0 for v in etas) and min(etas) / max(etas) >= 1 - tol,
            "M_finite": math.isfinite(M1) and math.isfinite(M2),
            "M_stable": abs(M2 / M1 - 1) <= tol,
            "L_finite": math.isfinite(L1) and math.isfinite(L2),
            "L_stable": abs(L2 / L1 - 1) <= tol,
        }


def check_ku_inequalities(tree: CellTree) -> KUReport:
    """Empirical eta, M and c_1 over the retained cells.

    eta: ln r_{n+1} / r_n = q_n + ln(lam)/r_n.  M: ln|(E^n)'(z)| - sum ln r_j
    = sum ln x_j.  c_1: n ln c_1 = sum of the ku2 terms along the chain.
    """
    if tree.depth < 2:
        raise DomainError("need a tree of depth >= 2")
    p = tree.params
    eta, ln_M, c1, ln_L = {}, {}, {}, {}
    for n in range(1, tree.depth + 1):
        if n < tree.depth:
            parents = {c.parent for c in tree.levels[n + 1]}
            eta[n] = min(tree.levels[n][i].q + p.log_lam * _inv(tree.levels[n][i].log_r) for i in parents)
        means, cs = [], []
        for i in range(len(tree.levels[n])):
            g = chain_geometry(tree, n, i)
            means.append(abs(sum(g.log_x)) / n)
            cs.append(sum(c.ku2_term for c in tree.chain(n, i)[1:]) / n)
        ln_M[n] = max(means)
        c1[n] = (math.exp(min(cs)), math.exp(max(cs)))
        ln_L[n] = max(abs(min(cs)), abs(max(cs)))
    return KUReport(eta, ln_M, c1, ln_L, tree.root.log_ratio_R)


def koebe_constant(tree: CellTree, n_boundary: int = 256) -> float:
    """min over depth-1 cells of dist(z, boundary of K_1) * |E'(z)|."""
    p = tree.params
    t = np.linspace(0.0, 1.0, n_boundary, endpoint=False)
    best = math.inf
    for i, c in enumerate(tree.levels[1]):
        g = chain_geometry(tree, 1, i)
        rv = math.exp(c.log_r)
        a, im0 = c.q * rv, _im_centre(c)
        lo, hi = im0 - math.pi / 2, im0 + math.pi / 2
        pts = np.concatenate([
            a + math.pi * t + 1j * lo,
            a + math.pi + 1j * (lo + math.pi * t),
            a + math.pi * (1 - t) + 1j * hi,
            a + 1j * (hi - math.pi * t),
        ])
        pre = np.log(np.abs(pts)) - p.log_lam + 1j * (np.angle(pts) + tree.root.v)
        d = float(np.min(np.abs(pre - g.z)))
        best = min(best, d * math.exp(g.log_x[0] + g.log_r[0]))
    return best


# ---------------------------------------------------------------- mass distribution


def _chord_integral(qc, vc, rho, q_lo, q_hi, v_lo, v_hi, weighted: bool, n: int = 64) -> float:
    """Integral over {|(q,v) - (qc,vc)| < rho} cut to the rectangle, of 1/(q^2+v^2) or of 1."""
    lo, hi = max(q_lo, qc - rho), min(q_hi, qc + rho)
    if hi <= lo:
        return 0.0
    x, w = _gl(n)
    knots = [lo, hi]
    for edge in (v_hi - vc, v_lo - vc):
        if abs(edge) < rho:
            d = math.sqrt(rho * rho - edge * edge)
            knots += [qc - d, qc + d]
    knots = sorted(k for k in set(knots) if lo <= k <= hi)
    total = 0.0
    for a, b in zip(knots, knots[1:]):
        q = 0.5 * (b - a) * x + 0.5 * (a + b)
        h = np.sqrt(np.maximum(rho * rho - (q - qc) ** 2, 0.0))
        top = np.minimum(vc + h, v_hi)
        bot = np.maximum(vc - h, v_lo)
        inside = top > bot
        if weighted:
            val = (np.arctan(top / q) - np.arctan(bot / q)) / q
        else:
            val = top - bot
        total += 0.5 * (b - a) * float(np.dot(w, np.where(inside, val, 0.0)))
    return total


def _region_mass(fam: Family) -> float:
    """Integral of 1/(q^2+v^2) over the children region (scale free)."""
    x, w = _gl(64)
    q = 0.5 * (fam.qB - fam.qA) * x + 0.5 * (fam.qA + fam.qB)
    return 0.5 * (fam.qB - fam.qA) * float(np.dot(w, 2 * np.arctan(fam.V / q) / q))


def disk_share(fam: Family, qc: float, vc: float, rho: float) -> tuple[float, float]:
    """(measure share, area / r^2) of the disk |w/r - (qc + i vc)| < rho inside the region.

    The children's measure has density ~ 1/(q^2 + v^2) on [qA,qB] x [-V,V]
    (the |L(w)| factor varies by < 3% and is dropped here).
    """
    V = fam.V
    if V == 0.0:
        lo, hi = max(fam.qA, qc - rho), min(fam.qB, qc + rho)
        return (max(0.0, 1.0 / lo - 1.0 / hi) / (1.0 / fam.qA - 1.0 / fam.qB) if hi > lo else 0.0), 0.0
    num = _chord_integral(qc, vc, rho, fam.qA, fam.qB, -V, V, True)
    area = _chord_integral(qc, vc, rho, fam.qA, fam.qB, -V, V, False)
    return min(1.0, num / _region_mass(fam)), area


SMALL_DISK = 1e-6


def _ln_disk_share(fam: Family, chain: list[Cell], geo: ChainGeometry, n: int, f: float, const: float):
    """ln share of the level-n disk as (coefficient of ln r_n, small part, ln cover count).

    Disks with rho/r_n >= SMALL_DISK use the scaled region.  Smaller ones
    are measured in units of rho around E^n(z), placed by its exact offset
    from the region's left edge, with the density frozen at the centre:
    share = rho^2 area_1 / (|E^n z|^2 mass) and ln rho = f ln r_n + const.
    """
    lr = geo.log_r[n - 1]
    d = (f - 1.0) * lr + const
    ln_2pi2 = math.log(2 * math.pi**2)
    if d >= math.log(SMALL_DISK):
        qc, vc = geo.scaled[n - 1]
        share, area = disk_share(fam, qc, vc, math.exp(d))
        ln_share = math.log(share) if share > 0 else -math.inf
        ln_cover = math.log(area) + 2 * lr - ln_2pi2 if area > 0 else -math.inf
        return 0.0, ln_share, ln_cover
    cell = chain[n]
    if n < len(geo.log_x):
        re_off = geo.log_x[n]
        nxt = geo.scaled[n]
        im_off = math.atan2(nxt[1], nxt[0])
    else:
        re_off, im_off = 0.5 * math.pi, 0.0
    ln_rho = f * lr + const
    left = cell.col * math.pi + re_off
    im_c = (TWO_PI * cell.k if cell.k is not None else 0.0) + im_off
    # ln(Y/rho) = (1 - f) ln r + ln V - const
    ln_y = (1.0 - f) * lr + fam.log_V - const
    y_hi = math.exp(ln_y) if ln_y < 700 else math.inf

    def scaled(x):
        if x == 0.0:
            return 0.0
        e = math.log(abs(x)) - ln_rho
        return math.copysign(math.exp(e), x) if e < 700 else math.copysign(math.inf, x)

    area1 = _chord_integral(0.0, 0.0, 1.0, -scaled(left), math.inf,
                            -y_hi - scaled(im_c), y_hi - scaled(im_c), False)
    if area1 <= 0:
        return 0.0, -math.inf, -math.inf
    qc, vc = geo.scaled[n - 1]
    coef = 2 * f - 2.0
    small = 2 * const + math.log(area1) - math.log(qc * qc + vc * vc)
    if fam.log_V > math.log(1e-8):
        small -= math.log(_region_mass(fam))
    else:
        # thin strip: mass = 2 (Y/r) (1/qA - 1/qB)
        coef += 1.0
        small -= math.log(2 * (1 / fam.qA - 1 / fam.qB)) + fam.log_Y
    ln_cover = 2 * ln_rho + math.log(area1) - ln_2pi2
    return coef, small, ln_cover


@dataclass
class MassRow:
    level: int
    ln_t: float
    ln_mu_disk: float
    ln_ratio: float
    ln_cover: float


@dataclass
class MassReport:
    """``cell_scale`` holds ln(mu(D)/h) at t_n = c/|(E^{n-1})'(z)| per point;
    ``level_max`` the largest ratio over each level's radius window."""

    rows: list[list[MassRow]]
    cell_scale: list[list[float]]
    level_max: list[list[float]]
    verdict: str
    koebe: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point", "level", "ln_t", "ln_mu_disk", "ln_ratio", "ln_cover"])
            for i, rows in enumerate(self.rows):
                for r in rows:
                    w.writerow([i, r.level] + [f"{v:.17g}" for v in (r.ln_t, r.ln_mu_disk, r.ln_ratio, r.ln_cover)])


def _scales(geo: ChainGeometry, chain: list[Cell], n: int, c: float, n_scales: int):
    """Disk radii rho at level n as (f, const) with ln rho = f ln r_n + const.

    A geometric ladder from one square (rho = pi) up to the Koebe radius
    c |E^n z|, plus radii around the strip half-height psi(r_n), where the
    disk stops growing in area like rho^2 and starts growing like rho.
    """
    lr = geo.log_r[n - 1]
    top_const = math.log(c) + geo.log_x[n - 1]
    out = [(float(f), (1 - f) * math.log(math.pi) + f * top_const) for f in np.linspace(0.0, 1.0, n_scales)]
    lpr = chain[n].log_psi_r
    for th in (0.5, 1.0, 2.0):
        const = lpr + math.log(th)
        if const < top_const and lr + const > math.log(math.pi):
            out.append((1.0, const))
    return out


def mass_distribution_check(tree: CellTree, g: GaugeSpec, sample: int = 16, n_scales: int = 6) -> MassReport:
    """mu(D(z,t)) / h(t) along cell scales for sampled deepest-level rep points.

    For t in the level-n window the disk sits in K_{n-1}; E^n carries it to
    a disk of radius rho = |(E^n)'(z)| t around E^n(z), and mu(D) is
    mu(K_{n-1}) times the children's share of that disk.  The verdict is
    SUPPORTS-INFINITE when the ratio at the cell scales t_n decreases over
    the last three levels for every sampled point.
    """
    if tree.depth < 3:
        raise DomainError("mass distribution check needs depth >= 3")
    c = koebe_constant(tree)
    N = tree.depth
    cells = tree.levels[N]
    idx = sorted({int(round(j)) for j in np.linspace(0, len(cells) - 1, min(sample, len(cells)))})
    rows_all, maxima, cell = [], [], []
    for i in idx:
        chain = tree.chain(N, i)
        geo = chain_geometry(tree, N, i)
        rows, per_level, at_cell = [], [], []
        for n in range(1, N + 1):
            fam = _family(tree.params, tree.profile, chain[n - 1])
            qc, vc = geo.scaled[n - 1]
            lr = geo.log_r[n - 1]
            best, top = -math.inf, math.nan
            for f, const in _scales(geo, chain, n, c, n_scales):
                # ln t = ln rho - ln|(E^n)'(z)|, with the ln r_n terms combined first
                ln_t = (f - 1.0) * lr + const - sum(geo.log_x[:n]) - sum(geo.log_r[:n - 1])
                coef_r, ln_share, ln_cover = _ln_disk_share(fam, chain, geo, n, f, const)
                try:
                    ratio = _ln_ratio(g, chain, geo, n, f, const, coef_r, ln_share)
                except DomainError:
                    continue  # radius outside the gauge's domain
                rows.append(MassRow(n, ln_t, chain[n - 1].ln_mu + coef_r * lr + ln_share, ratio, ln_cover))
                best = max(best, ratio)
                if f == 1.0 and const == math.log(c) + geo.log_x[n - 1]:
                    top = ratio
            per_level.append(best)
            at_cell.append(top)
        rows_all.append(rows)
        maxima.append(per_level)
        cell.append(at_cell)
    usable = [m[-3:] for m in cell if len(m) >= 3 and all(math.isfinite(v) for v in m[-3:])]
    dec = bool(usable) and len(usable) == len(cell) and all(m[1] < m[0] and m[2] < m[1] for m in usable)
    return MassReport(rows_all, cell, maxima, "SUPPORTS-INFINITE" if dec else "INCONCLUSIVE", c)


def _ln_ratio(g: GaugeSpec, chain: list[Cell], geo: ChainGeometry, n: int, f: float, const: float,
              coef_share: float, ln_share: float) -> float:
    """ln(mu(D)/h(t)) with the huge ln r_j combined by coefficient before evaluation.

    ln mu(K_{n-1}) = sum_{j<n} (ku2_j - 2 ln r_j - ln(psi_j/r_j)) and
    -ln t = sum_{j<=n} (ln r_j + ln x_j) - f ln r_n - const.
    """
    if ln_share == -math.inf:
        return -math.inf
    coef = {j: 0.0 for j in range(1, n + 1)}
    coef[n] += coef_share
    small = ln_share
    for j in range(1, n):
        coef[j] -= 2.0
        small += chain[j].ku2_term - chain[j].log_psi_r
    sx = sum(geo.log_x[:n])
    if g.kind == "power":
        s = g.s
        for j in range(1, n + 1):
            coef[j] += s
        coef[n] -= s * f
        small += s * (sx - const)
    else:
        for j in range(1, n + 1):
            coef[j] += 1.0
        coef[n] -= f
        minus_ln_t = sum(geo.log_r[:n]) - f * geo.log_r[n - 1] + sx - const
        small += sx - const + g.log_p(minus_ln_t)
    return small + sum(a * geo.log_r[j - 1] for j, a in coef.items() if a != 0.0)


# ---------------------------------------------------------------- mu-distributed sampling


def sample_points(p: Params, psi: GaugeProfile, n_points: int, depth: int = 3, seed: int = 0,
                  z0: complex | None = None) -> np.ndarray:
    """Rep points of depth-``depth`` cells drawn from mu, as complex numbers.

    Level 1 is drawn from the enumerated shares, level 2 from the continuum
    density.  Levels beyond 2 move a point by a relative 1/r_2; this is
    checked to be below double resolution rather than computed.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    rng = np.random.default_rng(seed)
    root = _root_cell(p, psi, default_root(p) if z0 is None else z0)
    fam1 = _family(p, psi, root)
    if fam1 is None or not fam1.enumerated:
        raise DomainError("the root's children must be enumerable")
    cols, ks, lnf = enumerate_children(p, fam1)
    w = np.exp(lnf - lnf.max()).ravel()
    pick = rng.choice(w.size, size=n_points, p=w / w.sum())
    r1 = math.exp(fam1.log_r)
    col1, k1 = cols[pick // ks.size], ks[pick % ks.size]
    a1 = fam1.qA * r1 + col1 * math.pi
    if depth == 1:
        w1 = (a1 + 0.5 * math.pi) + 1j * (TWO_PI * k1)
    else:
        re_s, im_s = np.empty(n_points), np.empty(n_points)
        for idx in np.unique(pick):
            sel = np.nonzero(pick == idx)[0]
            c1 = Cell(1, 0, float(a1[sel[0]] / r1), TWO_PI * int(k1[sel[0]]) / r1, int(k1[sel[0]]),
                      fam1.log_r, fam1.log_psi_r, 0.0, 0.0, 0.0)
            fam = _family(p, psi, c1)
            if fam is None:
                raise ResolutionError("a level-1 square has no children")
            if depth > 2 and fam.log_r < math.log(1e16):
                raise ResolutionError("levels beyond 2 are resolvable here; sample with depth=2")
            re_s[sel], im_s[sel] = _draw_qv(rng, fam, sel.size)
        # w_1 = a_1 + ln x_2 + i (arg w_2 + 2 pi k_1), with w_2 the level-2 centre
        w1 = (a1 + 0.5 * np.log(re_s**2 + im_s**2)) + 1j * (np.arctan2(im_s, re_s) + TWO_PI * k1)
    return np.log(np.abs(w1)) - p.log_lam + 1j * (np.angle(w1) + root.v)


def _draw_qv(rng, fam: Family, n: int):
    """n draws from density ~ 1/((q^2+v^2) Lambda^2) on the family rectangle."""
    V = fam.V
    grid_q = np.array([fam.qA, fam.qA, fam.qB, fam.qB, fam.qA, fam.qB])
    grid_v = np.array([-V, V, -V, V, 0.0, 0.0])
    lam_lo = float(np.min(_lam_factor(fam, grid_q, grid_v))) * (1 - 1e-9)
    qs, vs = [], []
    got = 0
    while got < n:
        m = 2 * (n - got) + 16
        u = rng.random(m)
        q = 1.0 / (1.0 / fam.qA - u * (1.0 / fam.qA - 1.0 / fam.qB))
        v = V * (2 * rng.random(m) - 1)
        acc = (q * q / (q * q + v * v)) * (lam_lo / _lam_factor(fam, q, v)) ** 2
        keep = rng.random(m) < acc
        qs.append(q[keep])
        vs.append(v[keep])
        got += int(keep.sum())
    return np.concatenate(qs)[:n], np.concatenate(vs)[:n]
