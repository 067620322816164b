"""Walkthrough: the alternating-block construction.

Starts from the canonical 5x5 pair (corner densities 10/16 and 16/16),
runs toy construction steps, and shows what the rigorous constant
calculators demand at desk scale.  Everything printed is an exact
rational or integer.
"""

from fractions import Fraction as F

from delone import hierarchy, nonrect
from delone.patch import corner_density

q1, q2 = nonrect.starting_patches()
print("starting pair (closed 5x5 squares):")
print(q1, "\n")
print(q2, "\n")
print("corner densities:", corner_density(q1, 4), "and", corner_density(q2, 4))

print("\n--- one toy step: m=1, P*=1, N=1, one iteration ---")
spec = nonrect.build_new_patches(q1, q2, nonrect.BuildParams(m=1, P_star=1, N=1, ell=1))
out = hierarchy.materialize(spec, 2, 1)
print(f"output side {out.width}, {out.popcount()} points "
      f"(block counts {spec.count_matrix(1, 2)})")
print("bottom band of the first output (alternation visible in row 0):")
print("\n".join(str(out).splitlines()[-4:]))

print("\n--- three toy steps along the schedule L_n = n ---")
build = nonrect.build_delone_spec(nonrect.counting_schedule(3), 3, mode="toy")
for t in range(1, build.spec.num_levels + 1):
    d1 = build.spec.density(t, 1)
    d2 = build.spec.density(t, 2)
    print(f"level {t}: side {build.spec.side(t):>4}  densities {d1} / {d2}")
rep = hierarchy.validate_scheme(build.spec)
print("structural checks:", "all pass" if rep.ok else rep.failed())

print("\n--- what a rigorous step needs (L = 1, thirds targets) ---")
bundle = nonrect.rigorous_bundle(1, F(7, 8), F(3, 4))
for name, formula in bundle.anchors():
    print(f"  {name}: {formula}")
print("materialization at these scales is refused by the cell cap;")
print("the corner-density bracketing is still verified exactly on the")
print("implicit hierarchy (see `delone gen --mode rigorous`).")
