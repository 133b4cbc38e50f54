"""Assignment games with transfers: stability metrics for sub-optimal
matchings, pricing policies, and online matching simulators/evaluators."""

from .assignment import MatchingResult, core_point, max_weight_matching, optimal_value
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    Error,
    SchemaError,
    StructuralError,
)
from .evaluation import (
    AuditReport,
    AuditViolation,
    EvalConfig,
    EvalReport,
    avg_subset_instability,
    enumerate_support,
    evaluate,
    inequality_audit,
)
from .metrics import (
    MetricReport,
    brute_force_si,
    kappa,
    kappa_raw,
    kappa_submarket_oracle,
    metric_report,
    optimality_ratio,
    si_from_utilities,
    stability_index,
    subset_instability,
)
from .model import (
    Allocation,
    Market,
    Matching,
    UtilityProfile,
    find_blocking_pair,
    is_individually_rational,
    is_stable,
    social_welfare,
    surplus_matrix,
    utilities,
)
from .online import (
    EdgeGreedy,
    GreedyFreeDisposal,
    HalfPriced,
    Lottery,
    OnlineInstance,
    Ranking,
    VertexGreedy,
    algorithm_by_name,
    as_vertex_instance,
    half_wrapper,
    is_vertex_weighted,
    simulate,
    simulate_with_trace,
)
from .pricing import clamp_prices_ir, half_prices, min_si_prices, shapley_shubik_prices
from .simplex import LinearProgram, minimum_stabilizing_subsidy, solve

__version__ = "0.1.0"
