from .likelihood import gradient, gram, gram_v, negative_log_likelihood, outcome_index
from .estimator import (
    BETA_MODES,
    CALIBRATED_LAMBDA,
    EstimatorState,
    HyperParams,
    advance_designs,
    beta,
    default_eta,
    default_lambda,
    empirical_kappa,
    kappa_bound,
    maybe_refresh_pricing_estimate,
    omd_step,
    project_to_theta,
    recursive_beta_increment,
)
