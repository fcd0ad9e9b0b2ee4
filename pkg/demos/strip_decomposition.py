"""
Splitting a family into regulus strips and the rest
===================================================
"""
from kakeya_lab.tubes import (StripOracle, check_wolff_axioms, decompose_heisenberg_sl2,
                              gen_direction_separated, gen_sl2_family, strips_from_fat_tubes,
                              strips_from_triples)

for fam in (gen_sl2_family(2.0 ** -6, seed=0), gen_direction_separated(2.0 ** -5, seed=0)):
    cands = strips_from_fat_tubes(fam) + strips_from_triples(fam, 100, seed=0)
    oracle = StripOracle(fam)
    dec = decompose_heisenberg_sl2(fam, 0.1, cands, oracle)
    print(f"{fam.provenance}: {len(fam)} tubes, threshold {dec.threshold:.1f}, "
          f"{len(dec.strip_part)} in strips, {len(dec.heisenberg_part)} left over")
    print("  problems:", dec.verify(fam, cands, oracle) or "none")
    w = check_wolff_axioms(fam, n_samples=500, seed=0)
    print(f"  worst Wolff ratio {w.max_ratio:.2f} at s={w.worst.get('s')}, t={w.worst.get('t')}")
