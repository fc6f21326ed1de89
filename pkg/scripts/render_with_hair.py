"""Escape-time picture with a traced hair on top.

usage: python3 scripts/render_with_hair.py [OUT_DIR]
"""
import sys
from pathlib import Path

from hairlab import find_fixed_points
from hairlab.hairs import Itinerary, Periodic, trace_hair, write_trace_csv
from hairlab.render import Window, overlay_points, read_trace_points, render_escape, write_ppm

out = Path(sys.argv[1] if len(sys.argv) > 1 else "render_out")
out.mkdir(parents=True, exist_ok=True)
p = find_fixed_points(0.25)
win = Window(-1.0, 12.0, -8.0, 8.0)
img = render_escape(p, win, 800, 600, 64)
for block in ((1,), (0,), (2, -1)):
    tr = trace_hair(p, Itinerary((), Periodic(block)), 3.0, 12.0, 12, 400)
    csv_path = out / f"hair_{'_'.join(map(str, block))}.csv"
    write_trace_csv(tr, csv_path)
    overlay_points(img, win, read_trace_points(csv_path))
write_ppm(img, out / "julia_with_hairs.ppm")
print(f"wrote {out / 'julia_with_hairs.ppm'}")
