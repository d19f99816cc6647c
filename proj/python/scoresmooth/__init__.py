"""Score smoothing: empirical and smoothed score fields, their denoising flows, and trained score models."""

from ._core import (
    ConfigError,
    DomainError,
    F,
    F_inverse,
    NumericError,
    ParameterError,
    ScoreModel,
    TrainingSet,
    cli,
    denoise,
    esf,
    fit_delta,
    flow_map,
    kl_terminal_bound,
    nonsmoothness_lower_bound,
    optimality_report,
    pl_esf,
    posterior_mean,
    pushforward_density,
    sample_noised,
    smoothed_loss,
    smoothed_nonsmoothness,
    smoothed_pl_esf,
    terminal_decomposition,
    train_fixed_t,
)

__all__ = [name for name in dir() if not name.startswith("_")]
