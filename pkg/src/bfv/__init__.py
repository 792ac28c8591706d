"""Exact symbolic BFV complex of a coisotropic vector bundle on polynomial data."""

from .charge import (
    Charge,
    GeometricDiscrepancy,
    MCElement,
    MCResidual,
    ObstructionWitness,
    bfv_bracket,
    connecting_endomorphism,
    construct_charge,
    l_geo,
    l_nor,
    lift_normalized_mc,
    mc_check,
    verify_geometric_witness,
)
from .errors import *  # noqa: F401,F403
from .gauge import (
    GaugeGenerator,
    GaugeHomotopy,
    MorphismFamily,
    compose_homotopies,
    gauge_act,
    identity_homotopy,
    integrate_generator,
    invert_homotopy,
    is_pure,
    ode_residuals,
    project_generator,
)
from .poisson import (
    CoisotropyWitness,
    HamiltonianFamily,
    JacobiWitness,
    PoissonBivector,
    SectionMu,
    VectorField,
    check_coisotropic_section,
    check_jacobi,
    hamiltonian_vector_field,
    inverse_flow_point,
    numeric_flow_sample,
)
from .poly import Poly, VarTable, poly_diff, poly_parse, poly_serialize, poly_subst
from .scenario import Report, explain_failure, load_scenario, run_scenario
from .superalg import (
    BFVElement,
    Contraction,
    EndomorphismField,
    GhostWord,
    apply_morphism,
    bfv_mul,
    chain_i,
    chain_pr,
    endo_action,
    g_bracket,
    koszul_delta,
    koszul_homotopy,
    parse_element,
    serialize_element,
    shift_automorphism,
    tautological_section,
)

__version__ = "0.1.0"
