"""Lines, quadrics and reguli in R^3."""
from .heisenberg import ComplexLine, heisenberg_line, heisenberg_membership
from .lines import AffineMap, Line3, closest_points, line_distance
from .measures import separation, skewness, tetrahedron_volume, xij_determinant
from .quadric import MONOMIALS, QuadricPoly, fit_quadric
from .regulus import (CANONICAL_QUADRIC, CANONICAL_TRIPLE, Regulus, RegulusFrame,
                      RegulusStrip, affine_normalize, canonical_frame, curvature_identity,
                      fit_regulus, gauss_curvature, gauss_curvature_pair,
                      generator_through_point, ruling_line, sample_admissible_triple,
                      transversal_through_point)
