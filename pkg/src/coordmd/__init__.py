"""Finite-alphabet toolkit for two-description empirical coordination.

Rate-region computation for the two achievability regions, strong-typicality
bound calculators, executable random-coding schemes, and a Monte Carlo
harness measuring expected total variation at small blocklength.
"""

__version__ = "0.1.0"

from .probability import (  # noqa: F401
    ConditionalPmf,
    DistributionError,
    JointPmf,
    Pmf,
    SymbolSequence,
    compose,
    condition,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    in_delta_neighborhood,
    joint_type,
    marginalize,
    mutual_information,
    total_variation,
)
from .typicality import (  # noqa: F401
    BoundReport,
    TypicalityParams,
    delta_t,
    eps_m,
    is_conditionally_typical,
    is_strongly_typical,
    lemma_ta_bounds,
    lemma_tb_size_bounds,
    lemma_tc_prob_bounds,
)
from .region import (  # noqa: F401
    CandidateTh1,
    CandidateTh2,
    FrontierPoint,
    GridTooLargeError,
    RateConstraints,
    RegionFrontier,
    RegionQuery,
    SearchConfig,
    SearchConfigError,
    feasible_th1,
    feasible_th2,
    grid_oracle,
    point_achievable,
    th1_constraints,
    th2_constraints,
    trace_frontier,
)
from .montecarlo import (  # noqa: F401
    ExperimentConfig,
    KStatistics,
    ScenarioStats,
    k_statistics,
    run_experiment,
    run_trial,
)
