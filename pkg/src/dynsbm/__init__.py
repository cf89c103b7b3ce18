"""Dynamic stochastic block models: simulation and penalized least-squares estimation."""

from .clusters import ClusterFamily, PenaltySpec, log_cardinality, penalty, sparse_rate
from .core import (
    MembershipSequence,
    build_clustering_matrix,
    class_pair_counts,
    devectorize,
    expand_probability,
    sample_adjacency,
    vectorize,
)
from .enumeration import OracleLimits, enumerate_family
from .estimator import (
    EstimatorConfig,
    FitResult,
    fit,
    restricted_least_squares,
    search_clustering,
    select_support,
)
from .generators import DSBMTruth, generate_dsbm
from .graphon import GraphonFitConfig, GraphonSpec, fit_graphon, sample_graphon
from .harness import ExperimentConfig, rate_sweep, run_experiment
from .oracle import brute_force_fit
from .sparse import SparseConfig, check_a1_diagnostic, fit_sparse
from .transform import TemporalBasis, check_h_assumption, dct_basis

__version__ = "0.1.0"
