"""Escape-time images of lam*exp(z) as binary PPM, with optional hair overlays."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import Params
from .errors import DomainError

UNDECIDED = 128
ATTRACT_TOL = 1e-6
OVERLAY_RGB = (255, 40, 40)
ROWS_PER_TASK = 16


@dataclass(frozen=True)
class Window:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DomainError(f"empty window {self}")

    @classmethod
    def parse(cls, text: str) -> "Window":
        parts = [float(v) for v in text.split(",")]
        if len(parts) != 4:
            raise DomainError("window needs x_min,x_max,y_min,y_max")
        return cls(*parts)

    def pixel_centres(self, width: int, height: int, rows: range):
        xs = self.x_min + (np.arange(width) + 0.5) * (self.x_max - self.x_min) / width
        ys = self.y_max - (np.asarray(rows) + 0.5) * (self.y_max - self.y_min) / height
        return xs[None, :] + 1j * ys[:, None]

    def to_pixel(self, z: complex, width: int, height: int) -> tuple[int, int]:
        col = math.floor((z.real - self.x_min) / (self.x_max - self.x_min) * width)
        row = math.floor((self.y_max - z.imag) / (self.y_max - self.y_min) * height)
        return row, col


@dataclass(frozen=True)
class Classes:
    """Per-pixel decision: 1 attracted, 2 escaped, 0 undecided; ``step`` is the decision time."""

    kind: np.ndarray
    step: np.ndarray


def classify(p: Params, z: np.ndarray, iter_cap: int) -> Classes:
    if iter_cap < 1:
        raise DomainError("iter_cap must be >= 1")
    z = np.array(z, dtype=complex)
    kind = np.zeros(z.shape, dtype=np.uint8)
    step = np.zeros(z.shape, dtype=np.int32)
    # tower level >= 2 means value >= E(E(x0))
    escape_re = p.E(p.E(p.x0))
    live = np.ones(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(iter_cap + 1):
            zl = z[live]
            att = (np.abs(zl - p.alpha) < ATTRACT_TOL) | (zl.real < p.beta)
            esc = ~att & (zl.real >= escape_re)
            idx = np.flatnonzero(live)
            kind.flat[idx[att]] = 1
            kind.flat[idx[esc]] = 2
            step.flat[idx[att | esc]] = k
            live.flat[idx[att | esc]] = False
            if k == iter_cap or not live.any():
                break
            zl = z[live]
            z[live] = p.lam * np.exp(zl)
    return Classes(kind, step)


def shade(c: Classes) -> np.ndarray:
    """Gray level: attracted dark (0..127), escaped bright (129..255), undecided 128."""
    g = np.full(c.kind.shape, UNDECIDED, dtype=np.uint8)
    t = np.minimum(c.step, 15).astype(np.int32) * 8
    g[c.kind == 1] = t[c.kind == 1]
    g[c.kind == 2] = 255 - t[c.kind == 2]
    return g


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("HAIRLAB_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise DomainError("thread count must be >= 1")
    return threads


def render_escape(p: Params, window: Window, width: int, height: int, iter_cap: int = 64,
                  threads: int | None = None) -> np.ndarray:
    """(height, width, 3) uint8 image; row blocks run on a thread pool and are
    stitched back in row order, so the bytes do not depend on the pool size."""
    if width < 1 or height < 1:
        raise DomainError("resolution must be positive")
    if iter_cap < 1:
        raise DomainError("iter_cap must be >= 1")
    blocks = [range(a, min(a + ROWS_PER_TASK, height)) for a in range(0, height, ROWS_PER_TASK)]

    def run(rows):
        return shade(classify(p, window.pixel_centres(width, height, rows), iter_cap))

    n = worker_count(threads)
    if n == 1:
        parts = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(run, blocks))
    gray = np.concatenate(parts, axis=0)
    return np.repeat(gray[:, :, None], 3, axis=2)


def overlay_points(img: np.ndarray, window: Window, points, rgb=OVERLAY_RGB) -> int:
    """Paint each point's pixel; returns how many landed inside the image."""
    h, w = img.shape[:2]
    hit = 0
    for z in points:
        row, col = window.to_pixel(complex(z), w, h)
        if 0 <= row < h and 0 <= col < w:
            img[row, col] = rgb
            hit += 1
    return hit


def read_trace_points(path) -> list[complex]:
    with open(path, newline="") as fh:
        return [complex(float(r["re"]), float(r["im"])) for r in csv.DictReader(fh)]


def write_ppm(img: np.ndarray, path) -> None:
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    head = data.split(b"\n", 3)
    if head[0] != b"P6":
        raise DomainError("not a binary PPM")
    w, h = (int(v) for v in head[1].split())
    return np.frombuffer(head[3], dtype=np.uint8).reshape(h, w, 3)
