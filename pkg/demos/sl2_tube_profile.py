"""
A tube family that is thin at fine scale and full at coarse scale
=================================================================

Tubes whose chart coordinates lie near ad - bc = const.  At radius delta
their union is small; fattened to delta^(1/2) it fills a definite fraction
of the unit ball.
"""
import math

from kakeya_lab.cli import profile_scales
from kakeya_lab.tubes import gen_direction_separated, gen_sl2_family, minkowski_profile, union_volume

delta = 2.0 ** -6
fam = gen_sl2_family(delta, seed=0)
print(f"{len(fam)} tubes at delta = 1/{int(1 / delta)}")

stats = union_volume(fam)
print(f"union {stats.union_volume:.4f}  vs  sqrt(delta) = {math.sqrt(delta):.4f}")

prof = minkowski_profile(fam, profile_scales(delta))
for s, v in zip(prof.scales, prof.volumes):
    print(f"  r = {s:.4f}   |N_r| = {v:.4f}")
print(f"ratio |N_sqrt(delta)| / |N_delta| = {prof.ratio(prof.scales[-1], prof.scales[0]):.2f}")

# compare with a random family with separated directions
rand = gen_direction_separated(delta, seed=0)
print(f"random family: {len(rand)} tubes, union {union_volume(rand).union_volume:.4f}")
