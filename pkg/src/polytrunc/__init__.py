"""polytrunc: exact polyhedral combinatorics for truncated integrals.

Cones, fans, polytopes and convex chains in exact rational arithmetic;
conical decompositions; the incidence-algebra inversion lemma; truncated
functions over fans with certified convergence, integration, lattice sums,
and polynomiality in the support numbers.
"""

__version__ = "0.1.0"

from .chains import (
    Chain,
    VirtualPolytopePair,
    VPolytope,
    brianchon_gram,
    chains_equal,
    convolve,
    gamma_chain,
    integrate_chain,
    lattice_count_chain,
    lawrence_varchenko,
    polytope_inverse_chain,
    virtual_characteristic,
)
from .geometry import (
    Cone,
    Fan,
    Polytope,
    Space,
    SupportVector,
    build_fan,
    cone_from_rays,
    dual_cone,
    is_acute,
    minkowski_sum_support,
    nearest_face_partition,
    quotient_fan,
    realize_polytope,
    tangent_cone,
)
from .halfspaces import Constraint, HalfSpaceRegion
from .incidence import (
    FacePoset,
    IncidenceElement,
    incidence_convolve,
    langlands_elements,
    mobius,
    verify_langlands,
    zeta_element,
)
from .kexpr import KExpr, parse_kexpr
from .polynomiality import (
    FitReport,
    SupportPolynomial,
    discrete_identity_probe,
    fit_polynomial,
    polynomiality_identity_check,
    tensor_support_grid,
    vol_gamma,
)
from .truncation import (
    KFamily,
    absolute_integral_probe,
    check_convergence_hypotheses,
    induced_family,
    j_integral,
    j_zero,
    k_delta,
    k_pair,
    r_region,
    s_lattice_sum,
    s_region,
    verify_double_partition,
)

__all__ = [
    "Chain",
    "Cone",
    "Constraint",
    "FacePoset",
    "Fan",
    "FitReport",
    "HalfSpaceRegion",
    "IncidenceElement",
    "KExpr",
    "KFamily",
    "Polytope",
    "Space",
    "SupportPolynomial",
    "SupportVector",
    "VPolytope",
    "VirtualPolytopePair",
    "absolute_integral_probe",
    "brianchon_gram",
    "build_fan",
    "chains_equal",
    "check_convergence_hypotheses",
    "cone_from_rays",
    "convolve",
    "discrete_identity_probe",
    "dual_cone",
    "fit_polynomial",
    "gamma_chain",
    "incidence_convolve",
    "induced_family",
    "integrate_chain",
    "is_acute",
    "j_integral",
    "j_zero",
    "k_delta",
    "k_pair",
    "langlands_elements",
    "lattice_count_chain",
    "lawrence_varchenko",
    "minkowski_sum_support",
    "mobius",
    "nearest_face_partition",
    "parse_kexpr",
    "polynomiality_identity_check",
    "polytope_inverse_chain",
    "quotient_fan",
    "r_region",
    "realize_polytope",
    "s_lattice_sum",
    "s_region",
    "tangent_cone",
    "tensor_support_grid",
    "verify_double_partition",
    "verify_langlands",
    "virtual_characteristic",
    "vol_gamma",
    "zeta_element",
]
