"""Ratio-balanced maximum flows for collateral allocation, in exact arithmetic."""

from .balancer import (balance, build_p_lambda, find_lambda, is_feasible,
                       over_coverage_pass, phase_decompose)
from .model import (BalanceReport, Edge, FlowAssignment, Instance,
                    InstanceError, PhaseRecord, make_instance, mwsr_objective,
                    risk_vector, validate_instance)
from .priorities import (balance_with_priorities, eval_priority_objective,
                         lex_optimal_profile)

__all__ = [
    "BalanceReport", "Edge", "FlowAssignment", "Instance", "InstanceError",
    "PhaseRecord", "balance", "balance_with_priorities", "build_p_lambda",
    "eval_priority_objective", "find_lambda", "is_feasible",
    "lex_optimal_profile", "make_instance", "mwsr_objective",
    "over_coverage_pass", "phase_decompose", "risk_vector",
    "validate_instance",
]
