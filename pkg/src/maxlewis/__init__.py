"""One-shot active label selection for several models via maximum Lewis weights."""

from .diagnostics import (
    CurvePoint,
    class_imbalance,
    coverage_kappa,
    max_weight_sum_curve,
    synthetic_backbones,
)
from .errors import *  # noqa: F401,F403
from .lewis import LewisConfig, WeightVector, leverage_scores, lewis_weights, verify_fixed_point
from .oracle import DistortionReport, brute_force_opt, exact_distortion_p2, monte_carlo_distortion
from .pipeline import (
    ArrayOracle,
    FileOracle,
    LabelOracle,
    MultiRepDataset,
    PipelineResult,
    run_one_shot,
    shared_sampler,
    solve_models,
)
from .regression import (
    Activation,
    NeuronProblem,
    NeuronSolution,
    evaluate_guarantee,
    solve_constrained_neuron,
    solve_lp_regression,
)
from .sampling import (
    QueryPlan,
    SamplingDistribution,
    SamplingMatrix,
    bernoulli_sampling_matrix,
    build_sampling_matrix,
    draw_fixed,
    draw_until_distinct,
    make_rng,
    max_weight_distribution,
    sample_size_bound,
)

__version__ = "0.1.0"
