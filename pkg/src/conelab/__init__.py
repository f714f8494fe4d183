"""Discrete functional inequalities, heat kernels and resolutions on
manifolds with conical ends."""

__version__ = "0.1.0"

from .errors import (CapacityError, DomainError, InternalFault,
                     PreconditionError, UnsupportedError)
from .graphs import (WeightedGraph, cheeger_constant, spectral_gap,
                     degree_bound_m0, cheeger_gap_report,
                     isoperimetric_constant)
from .covering import (GoodCovering, Cell, validate_covering,
                       associated_graph, PatchingInput, patch_dirichlet,
                       patch_neumann)
from .cones import (CircleLink, GraphLink, sphere_link, DiscretizedCone,
                    build_cone, classify_ball, combine_parameter,
                    doubling_scan, separated_net, net_covering,
                    annular_covering, radius_field)
from .spectral import (heat_kernel, gaussian_fit, greens_function,
                       green_by_time_integration, poincare_constant,
                       scale_invariant_poincare_scan, covering_cell_constant,
                       indicial_spectrum)
from .toric import (ToricConeData, gorenstein_covector, cross_section,
                    maximal_triangulation, support_function_check,
                    kahler_class, invariant_A)
from .hypersurface import (WeightedPolynomial, weighted_degree,
                           cy_link_condition, bp_crepant_chain, bp_table_csv,
                           blowup_discrepancy)
