"""Closed-form applications: Donsker's delta, self-intersection local times, Gauss kernels."""

from chaos_regularity.models.donsker import (
    DonskerEvaluator,
    DonskerSpec,
    donsker_alpha_star,
    donsker_bs_norm,
    donsker_chaos_profile,
    donsker_evaluator,
    donsker_reduced_quadrature,
    log_beta_integral,
    log_beta_quadrature,
)
from chaos_regularity.models.gauss_kernel import (
    GaussKernelEvaluator,
    GaussKernelL2,
    GaussKernelSpec,
    GKRegularity,
    KappaTail,
    gauss_kernel_chaos_profile,
    gk_bs_norm,
    gk_derivative,
    gk_l2_check,
    gk_regularity,
)
from chaos_regularity.models.silt import (
    CallableCovariance,
    CovarianceModel,
    FbmCovariance,
    FbmParams,
    criterion_holds,
    fbm_covariance,
    fbm_cross,
    fbm_gprime_closed_form,
    silt_bs_norm,
    silt_d12_criterion,
    silt_gprime_bound,
    silt_intcon_criterion,
    silt_l2_criterion,
    silt_lambda_derivative,
    silt_lambda_derivatives,
    silt_pair_density,
)

__all__ = [
    "CallableCovariance",
    "CovarianceModel",
    "DonskerEvaluator",
    "DonskerSpec",
    "FbmCovariance",
    "FbmParams",
    "GKRegularity",
    "GaussKernelEvaluator",
    "GaussKernelL2",
    "GaussKernelSpec",
    "KappaTail",
    "criterion_holds",
    "donsker_alpha_star",
    "donsker_bs_norm",
    "donsker_chaos_profile",
    "donsker_evaluator",
    "donsker_reduced_quadrature",
    "fbm_covariance",
    "fbm_cross",
    "fbm_gprime_closed_form",
    "gauss_kernel_chaos_profile",
    "gk_bs_norm",
    "gk_derivative",
    "gk_l2_check",
    "gk_regularity",
    "log_beta_integral",
    "log_beta_quadrature",
    "silt_bs_norm",
    "silt_d12_criterion",
    "silt_gprime_bound",
    "silt_intcon_criterion",
    "silt_l2_criterion",
    "silt_lambda_derivative",
    "silt_lambda_derivatives",
    "silt_pair_density",
]
