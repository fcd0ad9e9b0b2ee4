"""Planar incidence tools: conics, polynomial partitioning, covering numbers
and the fuzzy point/conic incidence experiment."""
from .covering import (CoveringReport, NearVarietyProfile, conic_test_corpus, greedy_net,
                       near_variety_profile, zero_set_covering, zero_set_samples)
from .curves import (CONIC_MONOMIALS, Curve2, read_curves_csv, read_points_csv,
                     write_curves_csv, write_points_csv)
from .discrete_st import (DiscreteSTReport, discrete_st_experiment, generate_configuration,
                          partition_route)
from .distance import conic_distance, fuzzy_incidences, incidence_matrix, proxy_distance
from .partition import (CellLabeling, PartitionResult, PlanarPointSet, assign_cells,
                        ham_sandwich, polynomial_partition)
from .polynomials import Poly2, ProductPoly, veronese

__all__ = [
    "CONIC_MONOMIALS", "CellLabeling", "CoveringReport", "Curve2", "DiscreteSTReport",
    "NearVarietyProfile", "PartitionResult", "PlanarPointSet", "Poly2", "ProductPoly",
    "assign_cells", "conic_distance", "conic_test_corpus", "discrete_st_experiment",
    "fuzzy_incidences", "generate_configuration", "greedy_net", "ham_sandwich",
    "incidence_matrix", "near_variety_profile", "partition_route", "polynomial_partition",
    "proxy_distance", "read_curves_csv", "read_points_csv", "veronese", "write_curves_csv",
    "write_points_csv", "zero_set_covering", "zero_set_samples",
]
