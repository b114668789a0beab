"""Optimal on/off scheduling of a heat pump with thermal storage."""
from .core import (
    DemandProfile,
    PumpConfig,
    Schedule,
    SolveResult,
    StorageTrajectory,
    Tariff,
    TerminalMode,
    decode_schedule,
    encode_schedule,
    evaluate_cost,
)
from .demand import (
    DemandStats,
    LognormalDemandModel,
    LognormalModel,
    default_stats,
    fit_lognormal,
    ingest_history,
    sample_profiles,
)
from .optimizer import (
    InfeasibleDemand,
    ScheduleOptimizer,
    benchmark_cost,
    savings_report,
    simulate,
    solve,
    solve_batch,
    solve_bruteforce,
)
from .space import (
    PoissonBaseline,
    baseline_fraction_at_most,
    build_histogram,
    fit_truncated_poisson,
    space_report,
)

__version__ = "0.1.0"
