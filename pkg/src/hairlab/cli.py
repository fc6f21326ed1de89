"""Command-line front end: ``hairlab <subcommand> [options]``.

Every run writes into ``--out`` (default ``hairlab_out``): the command's CSV
files, ``summary.jsonl``, a ``config.txt`` echo of the resolved options and
a ``VERSION`` file.  Exit codes: 0 ok, 2 domain error, 3 resolution failure,
64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import find_fixed_points
from .errors import DomainError, RegimeError, ResolutionError, TowerRequired

EXIT_OK, EXIT_DOMAIN, EXIT_RESOLUTION, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected re,im, got {text!r}")
    return complex(float(parts[0]), float(parts[1]))


def _pair(text: str) -> tuple[float, float]:
    a, b = (float(v) for v in text.split(","))
    return a, b


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    command: str
    options: dict

    def echo(self, path: Path) -> None:
        with open(path, "w") as fh:
            fh.write(f"command={self.command}\n")
            for k in sorted(self.options):
                fh.write(f"{k}={fmt(self.options[k])}\n")


def read_config(path) -> list[tuple[str, str]]:
    out = []
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key=value")
        k, v = line.split("=", 1)
        out.append((k.strip().replace("_", "-"), v.strip()))
    return out


def _inject_config(argv: list[str], flags_taking_no_value: set[str]) -> list[str]:
    """Config entries become flags placed before the user's own, so explicit flags win."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    if not rest:
        raise UsageError("missing subcommand")
    extra = []
    for k, v in read_config(path):
        if k in flags_taking_no_value:
            if v.lower() in ("1", "true", "yes"):
                extra.append(f"--{k}")
        else:
            extra += [f"--{k}", v]
    return rest[:1] + extra + rest[1:]


# ---------------------------------------------------------------- parsing helpers


def _schroeder(p, ctx):
    if "S" not in ctx:
        from .schroeder import build_schroeder
        ctx["S"] = build_schroeder(p)
    return ctx["S"]


def parse_profile(text: str, p, ctx):
    from .gauge import GaugeProfile
    kind, _, eps = text.partition(":")
    eps = float(eps or 1.0)
    if kind == "logquot":
        return GaugeProfile.log_quotient_width(eps)
    if kind == "fraciter":
        return GaugeProfile.frac_iter_width(_schroeder(p, ctx), eps)
    raise DomainError(f"unknown profile {text!r} (logquot:EPS or fraciter:EPS)")


def parse_gauge(text: str, p, ctx):
    from .gauge import GaugeSpec
    parts = text.split(":")
    kind, args = parts[0], [float(v) for v in parts[1:]]
    if not args:
        raise DomainError(f"gauge {text!r} needs a parameter")
    if kind == "power":
        return GaugeSpec.power(args[0])
    if kind == "logpower":
        return GaugeSpec.log_power(args[0])
    if kind == "fraciter":
        return GaugeSpec.frac_iter(_schroeder(p, ctx), args[0], args[1] if len(args) > 1 else 1.0)
    raise DomainError(f"unknown gauge {text!r} (power:S, logpower:S, fraciter:S[:GAMMA])")


def parse_itinerary(text: str, prefix: str | None):
    from .hairs import Bounded, Growth, Itinerary, Periodic
    kind, _, arg = text.partition(":")
    if kind == "zeros":
        tail = Periodic((0,))
    elif kind == "periodic":
        tail = Periodic(tuple(int(v) for v in arg.split(",")))
    elif kind == "bounded":
        b, seed = arg.split(",")
        tail = Bounded(int(b), int(seed))
    elif kind == "growth":
        tail = Growth(float(arg))
    else:
        raise DomainError(f"unknown itinerary {text!r}")
    pre = tuple(int(v) for v in prefix.split(",")) if prefix else ()
    return Itinerary(pre, tail)


def _scales(text: str) -> list[float]:
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":"))
        return [2.0**-k for k in range(lo, hi + 1)]
    return [float(v) for v in text.split(",")]


# ---------------------------------------------------------------- commands


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def cmd_fixed_points(a, out, ctx):
    p = ctx["p"]
    rows = [(name, v, p.lam * math.exp(v) - v) for name, v in (("alpha", p.alpha), ("beta", p.beta))]
    _write_rows(out / "fixed_points.csv", ["name", "value", "residual"], rows + [("x0", p.x0, math.nan)])
    return {"alpha": p.alpha, "beta": p.beta, "x0": p.x0,
            "residual_alpha": rows[0][2], "residual_beta": rows[1][2]}


def cmd_schroeder(a, out, ctx):
    from .schroeder import build_schroeder, write_coefficients
    f = build_schroeder(ctx["p"], a.n_coeffs)
    write_coefficients(f, out / "coefficients.csv")
    return {"radius": f.radius, "limit_depth": f.limit_depth, **f.validation}


def cmd_frac_iter(a, out, ctx):
    from .schroeder import frac_iter
    from .tower import log_value, rel_diff, to_float
    p = ctx["p"]
    f = _schroeder(p, ctx)
    y = frac_iter(f, a.r, a.x)
    res = {"r": a.r, "x": a.x, "value": str(y), "float": to_float(p, y), "log_value": log_value(p, y)}
    rows = [("E^r(x)", str(y), to_float(p, y))]
    if a.twice:
        yy = frac_iter(f, a.r, y)
        direct = frac_iter(f, 2 * a.r, a.x)
        res.update(twice=str(yy), direct=str(direct), rel_error=rel_diff(p, yy, direct))
        rows += [("E^r(E^r(x))", str(yy), to_float(p, yy)), ("E^{2r}(x)", str(direct), to_float(p, direct))]
    _write_rows(out / "frac_iter.csv", ["quantity", "tower", "float"], rows)
    return res


def cmd_hair_trace(a, out, ctx):
    from .hairs import critical_parameter, trace_hair, write_trace_csv
    p = ctx["p"]
    s = parse_itinerary(a.itinerary, a.prefix)
    tr = trace_hair(p, s, a.u_lo, a.u_hi, a.depth, a.samples)
    write_trace_csv(tr, out / "hair.csv")
    return {"u_s": critical_parameter(p, s), "points": len(tr.points), "max_gap": max(tr.gaps, default=0.0)}


def cmd_endpoint(a, out, ctx):
    from .hairs import estimate_endpoint
    s = parse_itinerary(a.itinerary, a.prefix)
    e = estimate_endpoint(ctx["p"], s, a.depth, a.tol)
    _write_rows(out / "endpoint.csv", ["re", "im", "error", "depth", "kind"],
                [(e.value.real, e.value.imag, e.error, e.depth, e.kind)])
    return {"re": e.value.real, "im": e.value.imag, "error": e.error, "kind": e.kind}


def cmd_membership(a, out, ctx):
    from .hairs import in_X
    p = ctx["p"]
    psi = parse_profile(a.profile, p, ctx)
    z = _complex(a.z)
    v = in_X(p, psi, z, a.k_max)
    _write_rows(out / "membership.csv", ["re", "im", "inside", "k", "reason"],
                [(z.real, z.imag, v.inside, v.k if v.k is not None else "", v.reason)])
    return {"verdict": str(v), "inside": v.inside}


def cmd_gauge_check(a, out, ctx):
    from .gauge import check_condp, check_condp2
    p = ctx["p"]
    g = parse_gauge(a.gauge, p, ctx)
    psi = parse_profile(a.profile, p, ctx)
    fn = check_condp if a.condition == "p" else check_condp2
    rep = fn(g, psi, a.delta, _pair(a.t_range))
    rep.write_csv(out / "gauge_check.csv")
    return {"holds": rep.holds, "t_star": rep.t_star, "first_failure": rep.first_failure}


def _tree(a, ctx):
    from .measure import build_cell_tree
    p = ctx["p"]
    psi = parse_profile(a.profile, p, ctx)
    z0 = _complex(a.root) if a.root else None
    return build_cell_tree(p, psi, z0, a.depth, a.max_cells)


def cmd_cell_tree(a, out, ctx):
    from .measure import check_ku_inequalities
    t = _tree(a, ctx)
    t.write_csv(out / "cells.csv")
    res = {"depth": t.depth, "levels": [len(c) for c in t.levels],
           "share_sum_error": [r.share_sum_error for r in t.reports],
           "ln_retained_mass": [r.ln_retained_mass for r in t.reports]}
    if t.depth >= 2:
        ku = check_ku_inequalities(t)
        res.update(eta=ku.eta, ln_M=ku.ln_M, ln_L=ku.ln_L, stable=ku.stable(t.depth - 1, t.depth))
    return res


def cmd_measure_check(a, out, ctx):
    p = ctx["p"]
    t = _tree(a, ctx)
    g = parse_gauge(a.gauge, p, ctx)
    from .measure import mass_distribution_check
    rep = mass_distribution_check(t, g, a.sample)
    rep.write_csv(out / "mass.csv")
    return {"verdict": rep.verdict, "koebe": rep.koebe, "cell_scale_ratios": rep.cell_scale}


def _read_points(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([complex(float(r["re"]), float(r["im"])) for r in rows])


def cmd_box_count(a, out, ctx):
    from .covering import gauge_box_count
    from .measure import sample_points
    p = ctx["p"]
    if a.input:
        pts = _read_points(a.input)
    else:
        pts = sample_points(p, parse_profile(a.profile, p, ctx), a.points, a.depth, a.seed)
    bc = gauge_box_count(pts, parse_gauge(a.gauge, p, ctx), _scales(a.scales))
    bc.write_csv(out / "box_count.csv")
    return {"dimension": bc.dimension, "stderr": bc.stderr, "band": bc.band, "points": len(pts)}


def cmd_vitali(a, out, ctx):
    from .covering import check_vitali, vitali_select
    if a.input:
        with open(a.input, newline="") as fh:
            balls = [((float(r["x"]), float(r["y"])), float(r["r"])) for r in csv.DictReader(fh)]
    else:
        rng = random.Random(a.seed)
        balls = [((rng.uniform(0, 10), rng.uniform(0, 10)), rng.uniform(0.01, 1.0)) for _ in range(a.random)]
    sel = vitali_select(balls)
    _write_rows(out / "selected.csv", ["index", "x", "y", "r"],
                [(i, balls[i][0][0], balls[i][0][1], balls[i][1]) for i in sel])
    return {"balls": len(balls), "selected": len(sel), **check_vitali(balls, sel)}


def cmd_render(a, out, ctx):
    from .render import Window, overlay_points, read_trace_points, render_escape, write_ppm
    p = ctx["p"]
    w = Window.parse(a.window)
    img = render_escape(p, w, a.width, a.height, a.iter_cap, a.threads)
    hit = overlay_points(img, w, read_trace_points(a.overlay)) if a.overlay else 0
    write_ppm(img, out / "render.ppm")
    gray = img[:, :, 0]
    return {"width": a.width, "height": a.height, "overlay_pixels": hit,
            "undecided": int(np.count_nonzero((gray == 128) & (img[:, :, 1] == 128)))}


COMMANDS = {
    "fixed-points": cmd_fixed_points, "schroeder": cmd_schroeder, "frac-iter": cmd_frac_iter,
    "hair-trace": cmd_hair_trace, "endpoint": cmd_endpoint, "membership": cmd_membership,
    "gauge-check": cmd_gauge_check, "cell-tree": cmd_cell_tree, "measure-check": cmd_measure_check,
    "box-count": cmd_box_count, "vitali": cmd_vitali, "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hairlab", description="Hairs and gauge measures of lam*exp(z).")
    ap.add_argument("--version", action="version", version=f"hairlab {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--lambda", dest="lam", type=float, default=0.25)
        sp.add_argument("--x0", type=float, default=None, help="override x0 = beta + 1")
        sp.add_argument("--out", default="hairlab_out")
        return sp

    add("fixed-points", "attracting and repelling real fixed points")
    sp = add("schroeder", "Taylor coefficients of the linearizer")
    sp.add_argument("--n-coeffs", type=int, default=160)
    sp = add("frac-iter", "real fractional iterate E^r(x)")
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--twice", action="store_true", help="compare E^r(E^r(x)) with E^{2r}(x)")
    for name, helptext in (("hair-trace", "trace points on a hair"), ("endpoint", "estimate a hair endpoint")):
        sp = add(name, helptext)
        sp.add_argument("--itinerary", default="zeros",
                        help="zeros | periodic:A,B,.. | bounded:B,SEED | growth:T")
        sp.add_argument("--prefix", default=None, help="comma-separated leading symbols")
        sp.add_argument("--depth", type=int, default=12 if name == "hair-trace" else 40)
        if name == "hair-trace":
            sp.add_argument("--u-lo", type=float, required=True)
            sp.add_argument("--u-hi", type=float, required=True)
            sp.add_argument("--samples", type=int, default=64)
        else:
            sp.add_argument("--tol", type=float, default=1e-8)
    sp = add("membership", "horizon test for X(x0, psi)")
    sp.add_argument("--z", required=True, help="re,im")
    sp.add_argument("--profile", default="fraciter:0.5")
    sp.add_argument("--k-max", type=int, default=6)
    sp = add("gauge-check", "growth conditions between a gauge and a width profile")
    sp.add_argument("--gauge", required=True)
    sp.add_argument("--profile", required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--condition", choices=("p", "p2"), default="p")
    sp.add_argument("--t-range", default="3,1e12")
    for name in ("cell-tree", "measure-check"):
        sp = add(name, "build the cell tree" if name == "cell-tree" else "mass-distribution check")
        sp.add_argument("--profile", default="logquot:1")
        sp.add_argument("--depth", type=int, default=3)
        sp.add_argument("--max-cells", type=int, default=20000)
        sp.add_argument("--root", default=None, help="re,im of a point in the root square")
        if name == "measure-check":
            sp.add_argument("--gauge", default="power:1")
            sp.add_argument("--sample", type=int, default=16)
    sp = add("box-count", "gauge box counting and dimension fit")
    sp.add_argument("--input", default=None, help="CSV with re,im columns")
    sp.add_argument("--profile", default="logquot:1")
    sp.add_argument("--points", type=int, default=100_000)
    sp.add_argument("--depth", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--gauge", default="power:1.5")
    sp.add_argument("--scales", default="4:14", help="K_LO:K_HI for 2^-k, or a comma list")
    sp = add("vitali", "greedy disjoint selection")
    sp.add_argument("--input", default=None, help="CSV with x,y,r columns")
    sp.add_argument("--random", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("render", "escape-time image (binary PPM)")
    sp.add_argument("--width", type=int, default=800)
    sp.add_argument("--height", type=int, default=600)
    sp.add_argument("--window", default="-1,12,-8,8")
    sp.add_argument("--iter-cap", type=int, default=64)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--overlay", default=None, help="hair CSV (re,im columns) drawn on top")
    return ap


_VALIDATE = {
    "n_coeffs": lambda v: v >= 2, "depth": lambda v: v >= 1, "samples": lambda v: v >= 2,
    "tol": lambda v: v > 0, "k_max": lambda v: v >= 1, "delta": lambda v: v > 0,
    "max_cells": lambda v: v >= 1, "sample": lambda v: v >= 1, "points": lambda v: v >= 1,
    "random": lambda v: v >= 1, "width": lambda v: v >= 1, "height": lambda v: v >= 1,
    "iter_cap": lambda v: v >= 1, "threads": lambda v: v is None or v >= 1,
}


def validate(a) -> None:
    for k, ok in _VALIDATE.items():
        if hasattr(a, k) and getattr(a, k) is not None and not ok(getattr(a, k)):
            raise DomainError(f"--{k.replace('_', '-')}={getattr(a, k)} is out of range")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def run(argv: list[str]) -> int:
    ap = build_parser()
    no_value = {"twice"}
    try:
        a = ap.parse_args(_inject_config(list(argv), no_value))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hairlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(a.out)
    opts = {k: v for k, v in vars(a).items() if k not in ("command", "out")}
    try:
        validate(a)
        p = find_fixed_points(a.lam, a.x0)
        out.mkdir(parents=True, exist_ok=True)
        RunConfig(a.command, opts).echo(out / "config.txt")
        (out / "VERSION").write_text(f"hairlab {__version__}\n")
        res = COMMANDS[a.command](a, out, {"p": p})
    except (DomainError, RegimeError, TowerRequired) as exc:
        print(f"hairlab: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ResolutionError as exc:
        print(f"hairlab: resolution failure: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except ValueError as exc:
        # malformed option text (e.g. --z abc) that argparse could not type-check
        print(f"hairlab: bad option value: {exc}", file=sys.stderr)
        return EXIT_USAGE
    line = json.dumps({"command": a.command, "version": __version__, **_jsonable(res)}, sort_keys=True)
    with open(out / "summary.jsonl", "a") as fh:
        fh.write(line + "\n")
    print(line)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    code = run(sys.argv[1:] if argv is None else argv)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
