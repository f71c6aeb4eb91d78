"""Estimation of additive functionals sum_i phi(p_i) of discrete distributions."""

__version__ = "0.1.0"

from .phi_models import (DistributionModel, PhiDomainError, PhiSpec, ThetaBoundsError,
                         cos_power, eval_phi, exp_power, get_spec, log_phi, power_alpha,
                         shannon_phi, theta_bounds, theta_of, verify_divergence_speed)
from .poly_approx import ApproxPoly, PrecisionError, RemezError, best_approx
from .smoothing import SmoothedPhi, hermite_eval, smoothed_eval
from .sampling import (Histogram, SplitHistograms, make_distribution, sample_multinomial,
                       sample_poisson_split, split_counts)
from .estimator import (EstimatorConfig, HybridEstimator, ThetaEstimate, config_validate,
                        estimate_theta, miller_madow_baseline, plugin_baseline)
from .risk_eval import (RiskReport, lecam_two_point_bound, mc_risk, rate_fit, run_grid,
                        worst_case_risk)

__all__ = [
    "DistributionModel", "PhiDomainError", "PhiSpec", "ThetaBoundsError", "cos_power",
    "eval_phi", "exp_power", "get_spec", "log_phi", "power_alpha", "shannon_phi",
    "theta_bounds", "theta_of", "verify_divergence_speed", "ApproxPoly", "PrecisionError",
    "RemezError", "best_approx", "SmoothedPhi", "hermite_eval", "smoothed_eval", "Histogram",
    "SplitHistograms", "make_distribution", "sample_multinomial", "sample_poisson_split",
    "split_counts", "EstimatorConfig", "HybridEstimator", "ThetaEstimate", "config_validate",
    "estimate_theta", "miller_madow_baseline", "plugin_baseline", "RiskReport",
    "lecam_two_point_bound", "mc_risk", "rate_fit", "run_grid", "worst_case_risk",
]
