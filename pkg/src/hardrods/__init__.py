"""Exact dynamics of hard rods on a line via sorting of free-flight points."""

from .core import (
    CollisionSchedule,
    DatumClass,
    PhaseState,
    RodGeometry,
    SortPermutation,
    canonicalize,
    check_state,
    classify_datum,
    collision_schedule,
    conserved_quantities,
    evaluate_position,
    evaluate_velocity,
    evolve,
    evolve_any,
    evolve_batch,
    from_fundamental,
    sort_with_permutation,
    to_fundamental,
)
from .errors import (
    BadDatum,
    DegenerateLine,
    EmptyTarget,
    HardRodError,
    OrderViolation,
    OverlapViolation,
    RejectionStall,
    TripleCollision,
)

__version__ = "0.1.0"

__all__ = [
    "BadDatum",
    "CollisionSchedule",
    "DatumClass",
    "DegenerateLine",
    "EmptyTarget",
    "HardRodError",
    "OrderViolation",
    "OverlapViolation",
    "PhaseState",
    "RejectionStall",
    "RodGeometry",
    "SortPermutation",
    "TripleCollision",
    "canonicalize",
    "check_state",
    "classify_datum",
    "collision_schedule",
    "conserved_quantities",
    "evaluate_position",
    "evaluate_velocity",
    "evolve",
    "evolve_any",
    "evolve_batch",
    "from_fundamental",
    "sort_with_permutation",
    "to_fundamental",
]
