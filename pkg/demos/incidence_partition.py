"""
Counting point-conic incidences through a polynomial partition
==============================================================
"""
import numpy as np

from kakeya_lab.incidence import (conic_test_corpus, discrete_st_experiment, incidence_matrix,
                                  partition_route, polynomial_partition, zero_set_covering)
from kakeya_lab.incidence.curves import Curve2

rng = np.random.default_rng(0)
pts = rng.uniform(-1, 1, (4000, 2))
res = polynomial_partition(pts, 6, rng)
sizes = sorted((len(c.indices) for c in res.cells), reverse=True)
print(f"degree {res.poly.degree}: {len(res.cells)} cells, largest {sizes[:5]}, "
      f"{len(res.boundary)} points on the boundary")

curves = [Curve2(rng.normal(size=6)) for _ in range(150)]
sub = pts[:300]
M = incidence_matrix(sub, curves, 0.01)
route = partition_route(sub, curves, 0.01, 3, rng, M)
print(f"incidences: brute force {int(M.sum())}, partition route {route['total']}")

for name, P in conic_test_corpus().items():
    rep = zero_set_covering(P, 0.02)
    print(f"  {name:14s} covering constant {rep.constant:.2f}  components {rep.components}")

rep = discrete_st_experiment(2.0 ** -7, 4, seed=0)
print(f"generated instance: I = {rep.incidences_brute}, constant {rep.constant:.3f}")
