"""Modal decomposition of bivariate distributions and its applications.

The package decomposes a joint distribution into the singular modes of its
canonical dependence matrix and exposes what that spectrum buys: HGR maximal
correlation, local mutual information, alternating-conditional-expectations
estimation, common-information configurations, CCA and rank-constrained
regression for the Gaussian case, attribute-matching recommendation, softmax
parameterization, and Monte Carlo validation of the sample-complexity tail
bounds.
"""

from .errors import DataError, ModalkitError, NumericalError, UsageError
from .probability import (
    Alphabet,
    JointPmf,
    Pmf,
    SamplePairs,
    alphabet,
    chi2_divergence,
    conditional,
    draw_samples,
    joint_from_samples,
    joint_from_table,
    kl_divergence,
    load_joint_tsv,
    load_samples_tsv,
    marginals,
    mutual_information,
)
from .modal import (
    Cdm,
    Dtm,
    ModalDecomposition,
    TruncatedJoint,
    build_cdm,
    build_dtm,
    build_quasi_cdm,
    decompose,
    dtm_to_joint,
    local_mi,
    maximal_correlation,
    posterior_truncated,
    reconstruct_truncated,
)
from .ace import AceOptions, AceTrace, ace_discrete, ace_gaussian, orthogonal_iteration
from .local_geometry import (
    AttributeConfig,
    InformationVector,
    dist_from_feature,
    error_exponent,
    info_vector,
    local_kl,
    multiattribute_config,
    random_orthonormal_features,
    synth_weak_joint,
)
from .common_info import (
    CommonInfoConfig,
    build_common_config,
    common_suff_stat,
    eps_common_information,
    posterior_w,
)
from .gaussian import (
    CcaDecomposition,
    GaussianJoint,
    build_ccm,
    cca,
    dtm_ccm_projection,
    gaussian_attribute_match,
    gaussian_common_info,
    gaussian_kl,
    gaussian_mi,
    pca_case,
    predictor_mse,
    rank_k_regression_kl,
    rank_k_regression_mmse,
)
from .apps import (
    Recommendation,
    SoftmaxParams,
    recommend,
    softmax_divergence_gap,
    softmax_fit,
    softmax_kl_objective,
)
from .experiments import (
    ChernoffReport,
    TailExperimentReport,
    chernoff_local,
    derive_seed,
    mc_feature_quality,
    mc_mi_error,
    mc_sigma_tail,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
