"""Walkthrough: mixing the two outputs to pin down patch frequencies.

Each construction step is followed by a 3x3 mixing arrangement that keeps
the other patch at the four corners.  The composed transition matrices
stay of the form [[1/2+d, 1/2-d], [1/2-d, 1/2+d]] with the offset shrinking
at least nine-fold per mixed level, so point density converges to 13/16.
"""

from fractions import Fraction as F

import numpy as np

from delone import hierarchy, ue
from delone.patch import Patch

build = ue.build_ue_spec(None, 3, mode="toy")
spec = build.spec

print("levels and exact densities (patch 1 / patch 2):")
for t in range(1, spec.num_levels + 1):
    kind = spec.levels[t - 2].meta.get("kind", "-") if t > 1 else "base"
    off = build.offset_between(1, t) if t > 1 else F(1, 2)
    print(f"  level {t} ({kind:>4}): side {spec.side(t):>5}  "
          f"offset {str(off):>12}  density {spec.density(t, 1)} / {spec.density(t, 2)}")
print("limit density:", build.limit_density())

print("\noffset contraction at mixing levels (exact):")
for t in range(3, spec.num_levels + 1):
    if spec.levels[t - 2].meta.get("kind") == "mix":
        before, after = build.offset_between(1, t - 1), build.offset_between(1, t)
        print(f"  1->{t - 1}: {before}   1->{t}: {after}   ratio {after / before}")

print("\nsliding frequency of a single occupied cell, with brackets:")
needle = Patch(np.ones((1, 1), dtype=np.uint8))
rep = ue.frequency_convergence_report(spec, needle, 1, 5)
print("level  patch  density            bracket")
for row in rep.rows:
    print(f"  {row.level}      {row.pid}    {str(row.density):>14}   "
          f"[{row.bracket_lo}, {row.bracket_hi}]")
print("spread per level:", [str(rep.spread(t)) for t in rep.levels()])

top = spec.num_levels
window = hierarchy.materialize(spec, top, 1)
dens = F(window.popcount(), window.width * window.height)
lo, hi = build.density_bracket(top)
print(f"\nmaterialized level-{top} window: density {dens}, "
      f"bracket [{lo}, {hi}], inside: {lo <= dens <= hi}")
