"""Loss-based priors for the degrees of freedom of multivariate t and t-copula models."""

from ._core import (
    DataError,
    DomainError,
    NumericError,
    PriorTable,
    cli,
    kendall_tau,
    kl_copula,
    kl_grid,
    kl_normal_t,
    kl_t_t,
    loss_based_mass,
    marginal_prior,
    prior,
    run_copula_analysis,
    run_copula_sampler,
    run_frequentist_study,
    run_mvt_analysis,
    run_mvt_sampler,
    sample_copula_model,
    sample_mvt,
    tail_lambda,
)

__all__ = [
    "DataError",
    "DomainError",
    "NumericError",
    "PriorTable",
    "cli",
    "kendall_tau",
    "kl_copula",
    "kl_grid",
    "kl_normal_t",
    "kl_t_t",
    "loss_based_mass",
    "marginal_prior",
    "prior",
    "run_copula_analysis",
    "run_copula_sampler",
    "run_frequentist_study",
    "run_mvt_analysis",
    "run_mvt_sampler",
    "sample_copula_model",
    "sample_mvt",
    "tail_lambda",
]
