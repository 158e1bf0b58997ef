"""Buyer-to-seller recommendation under capacity and conflict constraints.

C-REC (degree bounds only) is solved exactly by min-cost flow.  CAC-REC adds a
per-seller cap on conflicting buyer pairs; it is NP-hard, and this package
offers an exact branch-and-bound, LP and SDP roundings, and a greedy heuristic
with a ``2 + d`` guarantee.
"""
from .cacrec_greedy import conflict_degree, solve_greedy
from .cacrec_milp import solve_ilp, solve_lp_rounding
from .cacrec_sdp import solve_sdp_rounding
from .crec import solve_crec, solve_crec_lp
from .genlab import GenConfig, generate
from .model import (Instance, InstanceError, Recommendation, SolveReport, check_feasible, read_instance,
                    read_solution, validate, write_instance, write_solution)

__version__ = "0.1.0"

__all__ = [
    "GenConfig", "Instance", "InstanceError", "Recommendation", "SolveReport", "check_feasible",
    "conflict_degree", "generate", "read_instance", "read_solution", "solve_crec", "solve_crec_lp",
    "solve_greedy", "solve_ilp", "solve_lp_rounding", "solve_sdp_rounding", "validate", "write_instance",
    "write_solution",
]
