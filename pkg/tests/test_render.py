import hashlib
import math
import time

import numpy as np
import pytest

from hairlab.errors import DomainError
from hairlab.hairs import Itinerary, Periodic, trace_hair, write_trace_csv
from hairlab.render import (
    UNDECIDED,
    Window,
    classify,
    overlay_points,
    read_ppm,
    read_trace_points,
    render_escape,
    write_ppm,
)

WIN = Window(-1.0, 12.0, -8.0, 8.0)


def digest(img):
    return hashlib.sha256(img.tobytes()).hexdigest()


def test_alpha_attracted_at_step_zero(p25):
    c = classify(p25, np.array([p25.alpha + 0j]), 10)
    assert c.kind[0] == 1 and c.step[0] == 0


def test_real_point_right_of_x0_escapes(p25):
    c = classify(p25, np.array([p25.x0 + 1 + 0j]), 20)
    assert c.kind[0] == 2


def test_point_near_beta_undecided_with_small_cap(p25):
    c = classify(p25, np.array([p25.beta + 1e-12 + 0j]), 3)
    assert c.kind[0] == 0


def test_bad_iter_cap(p25):
    with pytest.raises(DomainError):
        classify(p25, np.zeros(1, dtype=complex), 0)
    with pytest.raises(DomainError):
        Window(1, 0, 0, 1)


def test_left_half_plane_is_fatou(p25):
    img = render_escape(p25, WIN, 260, 160, 40, threads=2)
    cols = WIN.x_min + (np.arange(260) + 0.5) * (WIN.x_max - WIN.x_min) / 260
    left = img[:, cols < p25.beta, 0]
    assert left.size and np.all(left < UNDECIDED)


def test_thread_count_invariance(p25, monkeypatch):
    ref = render_escape(p25, WIN, 200, 130, 48, threads=1)
    for n in (2, 3, 8):
        assert digest(render_escape(p25, WIN, 200, 130, 48, threads=n)) == digest(ref)
    monkeypatch.setenv("HAIRLAB_THREADS", "5")
    assert digest(render_escape(p25, WIN, 200, 130, 48)) == digest(ref)


def test_render_speed(p25):
    t = time.perf_counter()
    render_escape(p25, WIN, 800, 600, 64)
    assert time.perf_counter() - t < 10.0


def test_ppm_round_trip(p25, tmp_path):
    img = render_escape(p25, WIN, 31, 17, 20, threads=1)
    write_ppm(img, tmp_path / "a.ppm")
    assert np.array_equal(read_ppm(tmp_path / "a.ppm"), img)
    assert (tmp_path / "a.ppm").read_bytes().startswith(b"P6\n31 17\n255\n")


def test_overlay_registration(p25, tmp_path):
    tr = trace_hair(p25, Itinerary((), Periodic((1,))), 4.0, 9.0, 10, 16)
    write_trace_csv(tr, tmp_path / "h.csv")
    pts = read_trace_points(tmp_path / "h.csv")
    w, h = 400, 300
    img = np.zeros((h, w, 3), dtype=np.uint8)
    hit = overlay_points(img, WIN, pts)
    assert hit == len(pts)
    dx, dy = (WIN.x_max - WIN.x_min) / w, (WIN.y_max - WIN.y_min) / h
    for z in pts:
        row, col = WIN.to_pixel(z, w, h)
        cx = WIN.x_min + (col + 0.5) * dx
        cy = WIN.y_max - (row + 0.5) * dy
        assert abs(cx - z.real) <= dx and abs(cy - z.imag) <= dy
        assert tuple(img[row, col]) != (0, 0, 0)
