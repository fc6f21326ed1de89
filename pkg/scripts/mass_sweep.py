"""Mass-distribution ratios at the cell scales for a range of power gauges."""
from hairlab import GaugeProfile, GaugeSpec, find_fixed_points
from hairlab.measure import build_cell_tree, mass_distribution_check
from hairlab.schroeder import build_schroeder

p = find_fixed_points(0.25)
profiles = {"t/log t": GaugeProfile.log_quotient_width(1.0),
            "L^0.5": GaugeProfile.frac_iter_width(build_schroeder(p), 0.5)}
for name, psi in profiles.items():
    tree = build_cell_tree(p, psi, max_depth=3, max_cells=5000)
    for s in (0.8, 0.9, 1.0, 1.25, 1.5, 2.0):
        rep = mass_distribution_check(tree, GaugeSpec.power(s), sample=4)
        ratios = ", ".join(f"{v:9.3f}" for v in rep.cell_scale[0])
        print(f"{name:8s} power {s:4.2f}: ln(mu/h) at t_1..t_3 = {ratios}  {rep.verdict}")
