"""Claim-duration prediction with a Cox model whose risk score is a network.

Right-censored claim records with hierarchical categorical covariates are
one-hot encoded through a consolidation codebook, a skip-layer perceptron
risk score is trained against the Breslow partial likelihood with weight
decay, and the fitted model serves full predicted duration distributions,
including from partial inputs.
"""

from .coxnet import (
    FittedModel,
    NetworkWeights,
    TrainConfig,
    TrainingDivergedError,
    forward,
    gradient,
    objective,
    partial_loglik,
    predict_eta,
    predict_etas,
    train,
)
from .encoding import (
    ClaimRecord,
    ClaimsFileError,
    Codebook,
    CodebookError,
    build_codebook,
    encode,
    load_codebook,
    modelling_extract,
    quartile_bin,
    read_claims,
    save_codebook,
    write_claims,
)
from .model_io import load_model, save_model
from .partial_inputs import (
    EmptyMatchError,
    PartialPrediction,
    TrainingIndex,
    match_records,
    predict_method_a,
    predict_method_b,
)
from .selection import grid_search, main_effects_fit, score_model, split
from .survival import (
    BaselineHazard,
    SurvivalCurve,
    breslow_baseline,
    curve_mean,
    curve_quantile,
    generalized_r2,
    kaplan_meier,
    log_cumulative_hazard,
    log_rank,
    survival_from_eta,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
