"""Flows of automorphisms on Lie groups: Jordan decompositions, gradings and chain recurrence."""

__version__ = "0.1.0"

from .algebra import (
    AlgebraError,
    LieAlgebra,
    abelian,
    ad,
    bracket,
    derived_series,
    heisenberg,
    is_derivation,
    jacobi_defect,
    killing_form,
    sl2,
    so3,
)
from .chains import Chain, concatenate, elliptic_compose_chain, reverse_chain, translate_chain, validate_chain
from .grading import (
    algebra_decomposability_report,
    bracket_grading_defect,
    layer_decomposition,
    tri_decomposition,
)
from .graph import (
    build_chain_graph,
    extract_chain,
    mutual_reachability_fraction,
    omega_estimate,
    recurrent_estimate,
    strongly_connected_components,
)
from .groups import (
    FlowSpec,
    central_distance,
    factorize,
    flow_apply,
    group_inv,
    group_mul,
    left_invariant_distance,
    make_chart,
    uniform_neighborhood_check,
)
from .jordan import classify, generalized_eigenspaces, jordan_additive
from .quotient import homo_witness, induced_flow, lift_chain, project_chain, quotient_map
from .scenarios import catalog, run_scenario, sweep

__all__ = [name for name in dir() if not name.startswith("_")]
