"""Two-to-infinity norm perturbation bounds for leading subspaces.

Submodules
----------
linalg      norms, truncated decompositions, subspace metrics
bounds      error profiles and bound evaluators
clustering  k-means, misclustering metrics, spectral clustering, audits
generators  seeded Gaussian, block-model and multilayer instances
bench       configuration-driven Monte Carlo harness and CLI
"""

from .bounds import (
    AssumptionKnobs,
    BoundReport,
    NonsymErrorProfile,
    SymErrorProfile,
    SymmetrizedProfile,
    davis_kahan_bound,
    gaussian_rate_profile,
    hollow_decision,
    nonsym_error_profile,
    nonsym_two_inf_bound,
    rank_r_sym_bound,
    sym_error_profile,
    sym_refined_bound,
    sym_two_inf_bound,
    symmetrize_estimate,
    symmetrized_profile,
    symmetrized_refined_bound,
    symmetrized_two_inf_bound,
)
from .clustering import (
    ClusterModel,
    ClusterResult,
    KMeansAudit,
    kmeans_mismatch_audit,
    approx_kmeans,
    miscluster_count,
    perfect_clustering_certificate,
    spectral_cluster,
)
from .linalg import (
    SpectralPair,
    aligned_two_inf_error,
    hollow,
    leading_eigs,
    one_inf_norm,
    procrustes_align,
    sin_theta,
    spectral_norm,
    svd_r,
    two_inf_norm,
)

__version__ = "0.1.0"
