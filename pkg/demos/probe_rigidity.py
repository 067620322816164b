"""Walkthrough: probe-grid rigidity predicates on candidate maps.

A window [0, 2MN] x [0, M] is probed square by square.  For well-behaved
maps no probe step stretches, every square's increments project well onto
the baseline, and the coarse derivative barely deviates; a map that
stretches one step is caught with an exact witness.  Image boundary
curves, lattice counting near curves, and the small brute-force
minimum-distortion oracle complete the toolkit.
"""

from fractions import Fraction as F

from delone import maps, rectlab

grid = rectlab.GridSpec(M=4, N=2, P=2)
ident = rectlab.identity_on(grid)

print("identity map on the window", grid.window)
print("  stretched probe steps:", rectlab.check_no_stretch(ident, grid, F(1, 10)))
res = rectlab.find_regular_square(ident, grid, F(1, 10))
print("  first regular square:", res.k_star, " threshold", res.threshold)
print("  coarse-derivative deviation:", rectlab.coarse_derivative_deviation(ident, grid, res.k_star).max_sq)

print("\na map that doubles one step (x > 6 shifted right by 2):")
f = maps.CandidateMap(
    grid.window,
    {(x, y): (x if x <= 6 else x + 2, y) for x in range(17) for y in range(5)},
)
for v in rectlab.check_no_stretch(f, grid, F(1, 2)):
    print(f"  stretched step at {v.point} -> {v.target} "
          f"(square {v.k}, step^2 {v.step_sq} > bound^2 {v.bound_sq})")
exp = rectlab.expanding_pair_search(f, grid, F(1, 2), F(7, 8), F(3, 4),
                                    k=1, verify_densities=False)
print("  expanding-pair witness:", exp.witness)

print("\nimage boundary curve of square 1 (identity): a plain square")
curve = rectlab.boundary_curve(ident, grid, 1, L=1)
print("  length", curve.length, " deleted loops:", curve.deleted_loops)
print("  lattice points within distance 1:",
      rectlab.count_lattice_near_curve(curve, 1),
      f"(bound {25 * 1 * curve.length:.0f})")

print("\nbrute-force minimum distortion (exact, <= 8 points):")
pts = [(0, 0), (2, 0), (4, 0), (0, 2), (2, 2)]
res = rectlab.brute_force_min_bilip(pts, (0, 0, 2, 2))
print(f"  {pts} into a 3x3 box: squared constant {res.bilip_sq}, images {res.images}")

print("\nbounded-radius matching heuristic on the same stripe pattern:")
stripe = [(x, y) for x in (0, 2, 4) for y in range(3)]
h = rectlab.heuristic_grid_map(stripe, 3)
print(f"  free targets: radius^2 {h.radius_sq}, squared distortion {h.report.bilip_sq}")
boxed = rectlab.heuristic_grid_map(stripe, 5, target_box=(0, 0, 2, 2))
print(f"  packed into a 3x3 box: radius^2 {boxed.radius_sq}, "
      f"squared distortion {boxed.report.bilip_sq}")
