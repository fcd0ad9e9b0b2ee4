"""delta-tube arrangements on a voxel grid."""
from .core import Shading, Tube, TubeFamily, VoxelGrid, is_dyadic
from .decomposition import (StripDecomposition, StripOracle, decompose_heisenberg_sl2,
                            strips_from_fat_tubes, strips_from_triples)
from .entropy import EntropyReport, Grain, covered_entropy, grains_of, tangent_planes
from .generators import gen_direction_separated, gen_sl2_family, min_direction_angle
from .planiness import planiness_statistic, robust_transversality, triple_wedge_sum
from .raster import (MinkowskiProfile, UnionStats, full_shading, minkowski_profile, multiplicity,
                     rasterize, shading_voxels, union_volume, voxel_tube_pairs)
from .two_ends import TwoEndsResult, two_ends_reduce
from .wolff import (FatHairbrushReport, WolffReport, check_wolff_axioms, fat_hairbrush_counts,
                    hairbrush, parallel_slab_family)

__all__ = [
    "EntropyReport", "FatHairbrushReport", "Grain", "MinkowskiProfile", "Shading",
    "StripDecomposition", "StripOracle", "Tube", "TubeFamily", "TwoEndsResult", "UnionStats",
    "VoxelGrid", "WolffReport", "check_wolff_axioms", "covered_entropy",
    "decompose_heisenberg_sl2", "fat_hairbrush_counts", "full_shading", "gen_direction_separated",
    "gen_sl2_family", "grains_of", "hairbrush", "is_dyadic", "min_direction_angle",
    "minkowski_profile", "multiplicity", "parallel_slab_family", "planiness_statistic",
    "rasterize", "robust_transversality", "shading_voxels", "strips_from_fat_tubes",
    "strips_from_triples", "tangent_planes", "triple_wedge_sum", "two_ends_reduce",
    "union_volume", "voxel_tube_pairs",
]
