"""Walkthrough: prescribing the simplex of invariant measures.

Integer transition matrices with unit first row, equal first two columns,
and dominated lower columns realize a simplex with a chosen number of
extreme points; patches are then built so block counts meet the matrices
exactly.  Back-propagated measure vectors give finite-depth shadows of the
extreme points.
"""

from delone import choquet, hierarchy

cb = choquet.build_choquet_spec(2, 3, mode="toy", ratio_cap=8)
seq, witness = cb.seq, cb.witness

print("scales p:", list(seq.p), " stripe counts r:", list(seq.r[:2]))
print("transition matrices:")
for n, mat in enumerate(seq.A, start=1):
    print(f"  step {n}:")
    for row in mat:
        print("   ", row)

print("\nsequence checks:")
for row in choquet.validate_choquet_seq(seq).rows:
    print(f"  {row.name:22s} {'pass' if row.ok else 'FAIL'}  {row.witness}")

print(f"\nseparating row i0 = {witness.i0}; "
      f"column spread bounds {witness.dbar} > {witness.dbar_prime}")
for n, (jd, js) in witness.columns.items():
    print(f"  level {n}: dense column {jd}, sparse column {js}, cardinalities "
          f"{choquet.patch_cardinality(seq, witness.i0, n, jd)} / "
          f"{choquet.patch_cardinality(seq, witness.i0, n, js)}")

print("\nthe three starting patches:")
for i, p in enumerate(cb.spec.base, start=1):
    print(f"patch {i} ({p.popcount()} points):")
    print(p, "\n")

rep = hierarchy.validate_scheme(cb.spec)
print("hierarchy checks:", "all pass" if rep.ok else rep.failed())

print("\nmeasure vectors from the two deepest witness vertices:")
jd, js = witness.columns[seq.depth]
for label, terminal in (("dense vertex", jd), ("sparse vertex", js), ("barycenter", "barycenter")):
    vecs = choquet.measure_vectors(seq, seq.depth, terminal)
    print(f"  {label:13s} -> mu_1 = {[str(v) for v in vecs[0].values]}")
va = choquet.measure_vectors(seq, seq.depth, jd)[0].values[witness.i0 - 1]
vb = choquet.measure_vectors(seq, seq.depth, js)[0].values[witness.i0 - 1]
print(f"separation at coordinate {witness.i0}: {va - vb} "
      f">= {witness.dbar - witness.dbar_prime}")
