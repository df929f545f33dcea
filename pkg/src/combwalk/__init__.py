"""combwalk: random walks on comb-type subsets of the square lattice.

A comb-type lattice keeps the horizontal edges of Z^2 only on a set B of
y-levels.  The package simulates the walk with two interchangeable
engines, provides the occupation-time-change calculus that describes the
walk's scaling limits, and ships an experiment CLI that checks the
distributional predictions at desk scale.
"""

from .bset import (
    BSpec,
    ModelParams,
    all_levels,
    classify_regime,
    derive_params,
    difference,
    finite,
    halfplane,
    mixed_hphc,
    periodic,
    power_gap,
    two_dim_comb,
    union,
)
from .engine import (
    EnsembleSummary,
    MemoryBudgetError,
    WalkTrace,
    dyadic_checkpoints,
    markov_step,
    run_ensemble,
    simulate_decomposed,
    simulate_markov,
)
from .analysis import (
    ExactDist,
    KSResult,
    SlopeFit,
    ecdf,
    empirical_counts,
    envelope_diagnostics,
    exact_distribution,
    facts_report,
    fit_exponent,
    ks_against,
    ks_two_sample,
    tv_distance,
)
from .timechange import (
    BrownianPath,
    SupTail,
    TimeChange,
    arcsine_cdf,
    discrete_clock,
    horizontal_clock_cdf,
    horizontal_clock_pdf,
    oscillating_sup_tail,
    sample_inverse_clock,
    sample_oscillating_marginal,
    sample_oscillating_sup,
    sample_path,
    vertical_clock_cdf,
    vertical_clock_pdf,
)
from .rng import RngStream, split_seed

__version__ = "0.1.0"
