"""
The line family over Z/p[t]/(t^2)
=================================

Enumerate the set X and its lines for a few small primes, then run the
exhaustive incidence checks.
"""
from kakeya_lab.finite_ring import (build_sl2_lines, build_sl2_set, coarse_projection,
                                    verify_ring_axioms)

for p in (2, 3, 5):
    X = build_sl2_set(p)
    lines = build_sl2_lines(p)
    print(f"p={p}: |X|={len(X)}  lines={len(lines)}  coarse shadow={len(coarse_projection(X))}")

# every line stays inside X, yet at coarse resolution X fills the whole cube
p = 3
union = {q for L in build_sl2_lines(p) for q in L.points()}
print(f"union of the lines at p={p}: {len(union)} of {p ** 5} points")

for p in (2, 3):
    rep = verify_ring_axioms(build_sl2_lines(p), p)
    for a in rep.axioms:
        print(f"  p={p} {a.name:30s} {'ok' if a.passed else 'FAILS'}")
    if not rep.all_passed:
        w = rep.get("triangle_unique_plane").witness
        print("  witness:", w)
