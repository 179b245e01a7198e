"""Re-identification risk for discrete user representations.

Exact and bounding attacker accuracies for representation matrices, a
Topics API simulator, re-identification attacks and Monte Carlo harnesses.
"""

from .model import (
    FinitePrior,
    PredictionMatrix,
    RepresentationMatrix,
    posterior_matrix,
    sample_observation,
    sample_observation_vector,
    validate_representation_matrix,
)
from .rng import SeedSpec
from .bounds import (
    BoundReport,
    LdpParams,
    check_k_anonymity,
    check_ldp,
    construct_ldp_kanon_counterexample,
    construct_matching_gap_instance,
    exact_random_user_accuracy,
    fano_bound,
    kanon_accuracy_bound,
    ldp_accuracy_bound,
    lift_random_user_rule,
    matching_accuracy_bound,
    max_accuracy_bound,
    optimal_full_info_rule,
    partial_info_bound,
)
from .topics import (
    PopulationModel,
    TopicsConfig,
    TopSetTable,
    generate_population,
    get_topic,
    per_epoch_matrix,
    sequence_log_likelihood,
    simulate_two_sites,
)
from .attacks import (
    PopularityEstimate,
    alpha_from_p,
    estimate_popularity,
    hamming_attack,
    matching_assignment,
    weighted_hamming_attack,
    weighted_hamming_score,
)

__version__ = "0.1.0"
