"""Closed discrete generating sets ``A`` with ``G = A A^-1`` for countable groups.

The package builds finite stages of ``A`` deterministically, records every
choice in a JSONL trace and re-checks the trace with an independent verifier.
"""

from .budget import DEFAULT_BUDGET, GeometricBudget, parse_budget
from .case1 import Case1Engine, Case1State, InvariantViolation, run_case1, step_case1
from .case2 import Case2Engine, Case2State, run_case2, step_case2
from .groups import ContractError, FreeGroup, IntegerGroup, RationalGroup
from .instances import INSTANCE_NAMES, Instance, make_instance
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DEFAULT_BUDGET", "Case1Engine", "Case1State", "Case2Engine", "Case2State",
    "ContractError", "FreeGroup", "GeometricBudget", "INSTANCE_NAMES", "Instance",
    "IntegerGroup", "InvariantViolation", "RationalGroup", "make_instance", "parse_budget",
    "run_case1", "run_case2", "step_case1", "step_case2",
]
