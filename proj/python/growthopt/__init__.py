"""Growth-optimal portfolio selection under fixed plus proportional transaction costs."""

from ._growthopt import (
    AssumptionError,
    CostSpec,
    CostVariant,
    DomainError,
    GridSpec,
    GrowthEstimate,
    MarketModel,
    Policy,
    average_growth,
    cost_constants,
    dobrushin,
    expected_log_return,
    invariant_measure,
    ld_tail,
    load_model,
    model_hash,
    p_hat,
    parse_model,
    proportional_cost,
    run_command,
    solve_discounted,
    solve_e,
    solve_e_bisect,
    validate,
    vanishing_discount,
)

__all__ = [
    "AssumptionError",
    "CostSpec",
    "CostVariant",
    "DomainError",
    "GridSpec",
    "GrowthEstimate",
    "MarketModel",
    "Policy",
    "average_growth",
    "cost_constants",
    "dobrushin",
    "expected_log_return",
    "invariant_measure",
    "ld_tail",
    "load_model",
    "model_hash",
    "p_hat",
    "parse_model",
    "proportional_cost",
    "run_command",
    "solve_discounted",
    "solve_e",
    "solve_e_bisect",
    "validate",
    "vanishing_discount",
]
