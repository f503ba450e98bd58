"""Transport metrics, heat flow and curvature checks for density matrices
on weighted graphs and finite-dimensional matrix algebras."""

from .errors import (DomainError, NonConvergenceError, PositivityViolationError,
                     PreconditionError, SingularityError, StructuralError,
                     ValidationError)
from .algebra import (AlgebraSpec, Density, Element, HermBasis,
                      eigh_element, element_from_values, functional_calculus,
                      inner, l2_norm, lp_norm, random_density, random_element,
                      regularize_density, trace)
from .calculus import (Derivation, GraphSpec, LindbladSpec, TangentVector,
                       apply_derivation, dirichlet_energy, divergence,
                       generator_operator, graph_calculus, j_involution,
                       left_act, lindblad_calculus, right_act)
from .means import (MeanKind, divided_difference_apply, mean_value,
                    rho_hat_apply, rho_hat_solve, rho_norm)
from .functionals import (FisherValue, SeminormResult, am_seminorm,
                          carre_du_champ, connes_lower_bound, entropy,
                          entropy_variational_gap, fisher_information,
                          klein_gap, theta_seminorm)
from .semigroup import (dissipation_residual, equilibrium_density, heat_flow,
                        is_irreducible, l1_to_equilibrium)
from .transport import (DiscretePath, TransportResult, bb_distance,
                        convexity_check_w2, geodesic, transport_lower_bound,
                        two_point_oracle)
from .verify import (CheckReport, GEEstimate, check_contraction, check_evi,
                     check_geodesic_convexity, check_talagrand,
                     estimate_ge_constant, feller_check)
from .instances import (Instance, builtin_document, builtin_instance,
                        builtin_names, load_instance, write_builtin)

__version__ = "0.1.0"
