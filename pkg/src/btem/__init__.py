"""Learning mixtures of noisy binary templates with two-round EM.

Public surface: distance primitives (core), the generative model
(sampler), closed-form distance statistics (stats), the fitting
algorithms (em), the guarantee condition checker (theory), clustering
metrics (metrics), and the Monte Carlo sweep harness (harness).
"""

from . import core, em, errors, harness, metrics, sampler, sketch, stats, theory
from .core import (
    hamming_distance,
    l1_distance,
    min_pairwise_distance,
    round_to_binary,
)
from .em import (
    FitResult,
    e_step,
    estimate_q0,
    farthest_first_select,
    initial_cluster_count,
    log_likelihood,
    m_step,
    prune_by_weight,
    standard_em,
    two_round_em,
)
from .harness import (
    ExperimentConfig,
    SweepRecord,
    parse_config,
    read_csv,
    run_trial,
    sweep_grid,
    write_csv,
)
from .metrics import (
    ClusterEvaluation,
    conditional_entropy,
    conditional_purity,
    evaluate_fit,
    match_templates,
    oracle_mean_error,
)
from .sampler import (
    LabeledDataset,
    MixtureModel,
    load_dataset,
    make_line_templates,
    make_random_templates,
    sample_dataset,
    save_dataset,
)
from .sketch import render_sketch_svg
from .stats import (
    DistanceMoments,
    expected_cross_distance,
    mc_distance_moments,
    moments_cross_template_pair,
    moments_same_template_pair,
    moments_sample_to_fixed_point,
    moments_sample_to_own_template,
    tail_bound_own_template,
)
from .theory import (
    ConditionReport,
    TheoryParams,
    deviation_cap,
    domain_boundary,
    recovery_conditions,
    separation_rate,
    technical_conditions,
)

__version__ = "0.1.0"
