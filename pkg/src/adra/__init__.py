"""Threshold-based age-dependent random access: analysis, simulation, tuning."""

__version__ = "0.1.0"

from .analytic import (
    AoiStatistics,
    FixedPointSolution,
    NoSignChangeError,
    ProtocolConfig,
    StationaryAgeDistribution,
    average_aoi_adra,
    average_aoi_aira,
    g_eval,
    lemma_lower_bound,
    solve,
    solve_success_probability,
    stationary_distribution,
    stationary_pmf,
)
from .exact_chain import ExactAoiStatistics, exact_small_n_average_aoi, required_age_cap
from .opt import OptimumReport, SearchSpace, SweepRecord, optimize, sweep_delta
from .sim import (
    CapPolicy,
    Collision,
    DeviceState,
    Idle,
    SimConfig,
    SimReport,
    Success,
    empirical_success_probability,
    run,
    step,
)
