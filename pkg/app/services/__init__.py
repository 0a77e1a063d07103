"""
Services module initialization.
"""

from app.services.coloring_engine import (
    ColoringConstraint,
    color_avoiding,
    enumerate_L_colorings,
    is_L_colorable,
    max_request_match,
)
from app.services.flexibility import (
    epsilon_of_request,
    flexibility_exact,
    peel_weighted,
    weighted_flexibility_lp,
)
from app.services.gadget_builder import (
    KnapsackSpec,
    attach_gadget,
    build_knapsack_graph,
    build_log_gap_instance,
    canonical_coloring,
    quarter_satisfy,
    realizable_sets,
)
from app.services.graph_core import (
    Coloring,
    Graph,
    ListAssignment,
    Request,
    WeightedRequest,
    degeneracy,
    find_weak_reduction,
    is_weakly_degenerate,
    max_average_degree,
    sg_witness,
)
from app.services.nullstellensatz import (
    c_G_of_h_direct,
    c_G_of_h_recursive,
    complete_to_maximal,
    count_signed_shiftable,
    graph_polynomial_coeff,
    shift_condition,
    single_request_colorable,
)
from app.services.sampler import (
    avoidance_probability,
    exact_marginals_flex_wdeg,
    run_mad_procedure,
    sample_flex_wdeg,
)
from app.services.simplex import LPInstance, simplex_solve

__all__ = [
    "Graph",
    "ListAssignment",
    "Request",
    "WeightedRequest",
    "Coloring",
    "degeneracy",
    "find_weak_reduction",
    "is_weakly_degenerate",
    "max_average_degree",
    "sg_witness",
    "ColoringConstraint",
    "enumerate_L_colorings",
    "is_L_colorable",
    "max_request_match",
    "color_avoiding",
    "epsilon_of_request",
    "flexibility_exact",
    "weighted_flexibility_lp",
    "peel_weighted",
    "LPInstance",
    "simplex_solve",
    "sample_flex_wdeg",
    "exact_marginals_flex_wdeg",
    "avoidance_probability",
    "run_mad_procedure",
    "KnapsackSpec",
    "attach_gadget",
    "build_knapsack_graph",
    "canonical_coloring",
    "realizable_sets",
    "build_log_gap_instance",
    "quarter_satisfy",
    "graph_polynomial_coeff",
    "shift_condition",
    "count_signed_shiftable",
    "complete_to_maximal",
    "c_G_of_h_direct",
    "c_G_of_h_recursive",
    "single_request_colorable",
]
