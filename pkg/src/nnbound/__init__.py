"""Self-bounding nearest-neighbour classification.

Exact K-NN with deterministic tie handling, its kernel-space
vanishing-bandwidth formulation, probe-relative redundancy certificates,
and closed-form risk bounds that turn the trained classifier and its own
training data into a certified performance guarantee.
"""

from .bounds import (
    BoundResult,
    LogPriorMass,
    optimize_sparsity,
    refined_prior_mass,
    simple_prior_mass,
    thm1_bound,
    thm2_bound,
    thm3_bound,
    thm4_bound,
    thm5_bound,
)
from .data import (
    EuclideanMetric,
    LabeledSample,
    Metric,
    MetricDiagnostics,
    PrecomputedMetric,
    ProbeDomain,
    SquaredEuclideanMetric,
    check_metric_axioms,
    load_dataset,
    load_distance_matrix,
    pairwise_distances,
    save_dataset,
    save_distance_matrix,
)
from .errors import (
    ConfigurationError,
    DataError,
    EmptySampleError,
    InvalidSubsetError,
    NnboundError,
    ParseError,
    UndefinedHypothesisError,
    ValidationError,
    VerificationError,
)
from .kernel import (
    KernelClassifier,
    ParzenEstimate,
    RbfKernel,
    convergence_sweep,
    fit_parzen,
    kernel_predict,
    kernel_predict_batch,
    parzen_classify,
    parzen_classify_batch,
    rbf_eval,
    softmin_predict,
    softmin_predict_batch,
)
from .knn import (
    REJECT,
    KnnModel,
    empirical_risk,
    kl_predict,
    kl_predict_batch,
    margin,
    margins_batch,
    neighbourhood,
    neighbourhoods,
    predict,
    predict_batch,
    rejection_rate,
    training_margin,
    votes,
)
from .redundancy import (
    RedundancyReport,
    equivalence_count_lower_bound,
    hypothesis_equivalent,
    is_redundant_subset,
    max_redundant_exhaustive,
    max_redundant_greedy,
)
from .synth import SyntheticSpec, collinear, generate, make_rng, two_gaussians, uniform_box

__version__ = "0.1.0"
