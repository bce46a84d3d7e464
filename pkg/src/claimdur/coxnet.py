"""Skip-layer perceptron risk score under a Cox proportional-hazards model.

The risk score eta(x) is a single-hidden-layer network with logistic hidden
units, direct input-to-output (skip) connections and a constant-1 bias input
feeding both layers; no activation is applied at the output.  Training
minimizes the negative Breslow partial log-likelihood plus quadratic weight
decay, with a separate (smaller) decay on bias-origin weights.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .encoding import ClaimRecord, Codebook, consolidated_categories, encode, encode_many
from .survival import BaselineHazard, breslow_baseline

DEFAULT_BIAS_DECAY_RATIO = 1.0 / 25.0


class TrainingDivergedError(RuntimeError):
    """Objective became non-finite during optimization."""

    def __init__(self, evaluation: int):
        super().__init__(f"objective became non-finite at evaluation {evaluation}")
        self.evaluation = evaluation


@dataclass(frozen=True)
class NetworkWeights:
    """All edge weights; row/entry 0 of input-origin arrays is the bias node."""

    n_inputs: int
    n_hidden: int
    w_in_hidden: np.ndarray   # (n_inputs + 1, n_hidden)
    w_hidden_out: np.ndarray  # (n_hidden,)
    w_in_out: np.ndarray      # (n_inputs + 1,)  skip-layer incl. bias-to-output

    def __post_init__(self):
        wih = np.asarray(self.w_in_hidden, dtype=float)
        who = np.asarray(self.w_hidden_out, dtype=float)
        wio = np.asarray(self.w_in_out, dtype=float)
        if wih.shape != (self.n_inputs + 1, self.n_hidden):
            raise ValueError(f"w_in_hidden shape {wih.shape} inconsistent")
        if who.shape != (self.n_hidden,):
            raise ValueError(f"w_hidden_out shape {who.shape} inconsistent")
        if wio.shape != (self.n_inputs + 1,):
            raise ValueError(f"w_in_out shape {wio.shape} inconsistent")
        for arr in (wih, who, wio):
            if not np.all(np.isfinite(arr)):
                raise ValueError("weights must be finite")
        object.__setattr__(self, "w_in_hidden", wih)
        object.__setattr__(self, "w_hidden_out", who)
        object.__setattr__(self, "w_in_out", wio)

    def pack(self) -> np.ndarray:
        return np.concatenate(
            [self.w_in_out, self.w_hidden_out, self.w_in_hidden.ravel()]
        )

    @classmethod
    def unpack(cls, n_inputs: int, n_hidden: int, flat: np.ndarray) -> "NetworkWeights":
        k = n_inputs + 1
        return cls(
            n_inputs=n_inputs,
            n_hidden=n_hidden,
            w_in_out=flat[:k],
            w_hidden_out=flat[k:k + n_hidden],
            w_in_hidden=flat[k + n_hidden:].reshape(k, n_hidden),
        )


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; bias_decay defaults to decay / 25."""

    decay: float = 0.0
    bias_decay: float | None = None
    n_hidden: int = 0
    max_iterations: int = 500
    tolerance: float = 1e-8            # relative objective decrease
    gradient_tolerance: float = 1e-6   # gradient max-norm
    # scale 1.0 keeps the raw uniform[-0.5, 0.5] draws; much smaller scales
    # start the logistic hidden layer in its linear regime, where full-batch
    # descent settles on the skip-layer-only optimum and never recovers
    # interactions
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.decay < 0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")
        if self.bias_decay is not None and self.bias_decay < 0:
            raise ValueError(f"bias_decay must be >= 0, got {self.bias_decay}")
        if self.n_hidden < 0:
            raise ValueError(f"n_hidden must be >= 0, got {self.n_hidden}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.bias_decay is not None and self.bias_decay > self.decay:
            warnings.warn(
                f"bias_decay {self.bias_decay} exceeds decay {self.decay}",
                stacklevel=2,
            )

    @property
    def effective_bias_decay(self) -> float:
        if self.bias_decay is None:
            return self.decay * DEFAULT_BIAS_DECAY_RATIO
        return self.bias_decay


def init_weights(n_inputs: int, config: TrainConfig) -> NetworkWeights:
    """Uniform[-0.5, 0.5] draws scaled by init_scale, seeded."""
    rng = np.random.default_rng(config.seed)
    k = n_inputs + 1
    scale = config.init_scale

    def draw(*shape):
        return rng.uniform(-0.5, 0.5, size=shape) * scale

    return NetworkWeights(
        n_inputs=n_inputs,
        n_hidden=config.n_hidden,
        w_in_hidden=draw(k, config.n_hidden),
        w_hidden_out=draw(config.n_hidden),
        w_in_out=draw(k),
    )


def _with_bias(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.hstack([np.ones((x.shape[0], 1)), x])


def forward_many(weights: NetworkWeights, x: np.ndarray) -> np.ndarray:
    """Risk scores for a batch of input vectors (rows)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != weights.n_inputs:
        raise ValueError(
            f"input length {x.shape[1]} != network n_inputs {weights.n_inputs}"
        )
    xb = _with_bias(x)
    hidden = expit(xb @ weights.w_in_hidden)
    return xb @ weights.w_in_out + hidden @ weights.w_hidden_out


def forward(weights: NetworkWeights, x: np.ndarray) -> float:
    """Risk score eta for one input vector; no output activation."""
    return float(forward_many(weights, np.asarray(x, dtype=float)[None, :])[0])


class PartialLikelihood:
    """Breslow partial log-likelihood over fixed (durations, events).

    Precomputes the duration ordering and risk-set layout once; evaluations
    are then pure vectorized array work in a fixed deterministic order.
    """

    def __init__(self, durations, events):
        d = np.asarray(durations, dtype=float)
        e = np.asarray(events, dtype=bool)
        if d.ndim != 1 or d.shape != e.shape:
            raise ValueError("durations and events must be 1-d arrays of equal length")
        if d.size == 0:
            raise ValueError("no records")
        if not e.any():
            raise ValueError("no events: partial likelihood undefined")
        self.n = d.size
        self.order = np.argsort(d, kind="stable")
        self.durations = d[self.order]
        self.events = e[self.order]
        _, starts, inverse = np.unique(
            self.durations, return_index=True, return_inverse=True
        )
        self.group_starts = starts
        self.group_of_record = inverse
        n_groups = starts.size
        self.group_deaths = np.bincount(
            inverse[self.events], minlength=n_groups
        ).astype(float)
        self.death_groups = self.group_deaths > 0
        with np.errstate(divide="ignore"):
            self._log_deaths = np.log(self.group_deaths)  # -inf where none
        self.n_events = int(self.group_deaths.sum())

    def loglik_and_grad(self, etas: np.ndarray) -> tuple[float, np.ndarray]:
        """Log partial likelihood and its gradient w.r.t. each record's eta.

        Risk-set sums run through log-sum-exp accumulations, so the value and
        gradient stay finite for any finite etas (line-search overshoots
        recover instead of overflowing).
        """
        eta = np.asarray(etas, dtype=float)
        if eta.shape != (self.n,):
            raise ValueError("etas must match record count")
        eta_s = eta[self.order]
        e = self.events
        # log of the at-risk sum of exp(eta), per duration group
        log_risk = np.logaddexp.accumulate(eta_s[::-1])[::-1][self.group_starts]

        death_eta = np.bincount(
            self.group_of_record[e], weights=eta_s[e],
            minlength=self.group_starts.size,
        )
        dg = self.death_groups
        loglik = float(
            np.sum(death_eta[dg]) - np.sum(self.group_deaths[dg] * log_risk[dg])
        )

        # exp(eta_k) * sum over event groups at or before k of d_i / risk_i,
        # assembled in log space: every group in that sum has log_risk >= eta_k
        log_cum_hazard = np.logaddexp.accumulate(self._log_deaths - log_risk)
        term = np.exp(eta_s + log_cum_hazard[self.group_of_record])
        grad_sorted = np.where(e, 1.0, 0.0) - term
        grad = np.empty_like(grad_sorted)
        grad[self.order] = grad_sorted
        return loglik, grad

    def loglik(self, etas: np.ndarray) -> float:
        return self.loglik_and_grad(etas)[0]


def partial_loglik(etas, durations, events) -> float:
    """Breslow partial log-likelihood of given risk scores."""
    return PartialLikelihood(durations, events).loglik(np.asarray(etas, dtype=float))


def _penalty_masks(weights: NetworkWeights) -> tuple[np.ndarray, np.ndarray]:
    """Flat masks (non-bias-origin, bias-origin) matching pack() layout."""
    k = weights.n_inputs + 1
    bias_io = np.zeros(k, dtype=bool)
    bias_io[0] = True
    bias_ih = np.zeros((k, weights.n_hidden), dtype=bool)
    if weights.n_hidden:
        bias_ih[0, :] = True
    bias = np.concatenate(
        [bias_io, np.zeros(weights.n_hidden, dtype=bool), bias_ih.ravel()]
    )
    return ~bias, bias


def objective(
    weights: NetworkWeights, x, durations, events, decay: float, bias_decay: float
) -> float:
    """Negative partial log-likelihood plus quadratic weight decay."""
    pl = PartialLikelihood(durations, events)
    return _objective_and_grad(weights, np.atleast_2d(x), pl, decay, bias_decay)[0]


def gradient(
    weights: NetworkWeights, x, durations, events, decay: float, bias_decay: float
) -> NetworkWeights:
    """Exact gradient of the objective, same shapes as the weights."""
    pl = PartialLikelihood(durations, events)
    _, flat = _objective_and_grad(weights, np.atleast_2d(x), pl, decay, bias_decay)
    return NetworkWeights.unpack(weights.n_inputs, weights.n_hidden, flat)


def _objective_and_grad(
    weights: NetworkWeights,
    x: np.ndarray,
    pl: PartialLikelihood,
    decay: float,
    bias_decay: float,
) -> tuple[float, np.ndarray]:
    xb = _with_bias(x)
    hidden = expit(xb @ weights.w_in_hidden)
    etas = xb @ weights.w_in_out + hidden @ weights.w_hidden_out

    loglik, dl_deta = pl.loglik_and_grad(etas)
    g = -dl_deta  # gradient of the negative log-likelihood w.r.t. eta

    d_io = xb.T @ g
    d_ho = hidden.T @ g
    back = (g[:, None] * weights.w_hidden_out[None, :]) * hidden * (1.0 - hidden)
    d_ih = xb.T @ back
    grad = np.concatenate([d_io, d_ho, d_ih.ravel()])

    flat = weights.pack()
    plain, bias = _penalty_masks(weights)
    value = (
        -loglik
        + decay * float(np.sum(flat[plain] ** 2))
        + bias_decay * float(np.sum(flat[bias] ** 2))
    )
    grad[plain] += 2.0 * decay * flat[plain]
    grad[bias] += 2.0 * bias_decay * flat[bias]
    return value, grad


@dataclass(frozen=True)
class MatrixFit:
    """Low-level fit of the network on an explicit design matrix."""

    weights: NetworkWeights
    baseline: BaselineHazard
    etas: np.ndarray
    final_objective: float
    train_loglik: float
    stopped_by: str  # "objective" | "gradient" | "max_iterations"
    iterations: int
    objective_trace: tuple[float, ...] | None = None


def fit_matrix(
    x, durations, events, config: TrainConfig, record_trace: bool = False
) -> MatrixFit:
    """Minimize the penalized objective over the weights by L-BFGS-B.

    Stops on relative objective decrease < tolerance, gradient max-norm <
    gradient_tolerance, or max_iterations, and reports which.  Deterministic
    for a fixed config.seed.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.asarray(durations, dtype=float)
    e = np.asarray(events, dtype=bool)
    if np.any(d <= 0):
        raise ValueError(
            f"{int(np.sum(d <= 0))} records have nonpositive durations; "
            "the modelling extract must exclude them"
        )
    pl = PartialLikelihood(d, e)
    w0 = init_weights(x.shape[1], config)
    decay, bias_decay = config.decay, config.effective_bias_decay

    evaluations = [0]

    def fun(flat: np.ndarray) -> tuple[float, np.ndarray]:
        evaluations[0] += 1
        w = NetworkWeights.unpack(w0.n_inputs, w0.n_hidden, flat)
        value, grad = _objective_and_grad(w, x, pl, decay, bias_decay)
        if not np.isfinite(value):
            raise TrainingDivergedError(evaluations[0])
        return value, grad

    trace: list[float] = []
    callback = None
    if record_trace:
        trace.append(fun(w0.pack())[0])

        def callback(xk):
            w = NetworkWeights.unpack(w0.n_inputs, w0.n_hidden, xk)
            trace.append(_objective_and_grad(w, x, pl, decay, bias_decay)[0])

    result = minimize(
        fun,
        w0.pack(),
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options=dict(
            maxiter=config.max_iterations,
            ftol=config.tolerance,
            gtol=config.gradient_tolerance,
        ),
    )
    message = str(result.message).upper()
    if result.status == 1:
        stopped_by = "max_iterations"
    elif "PGTOL" in message:
        stopped_by = "gradient"
    elif "REDUCTION" in message and "F" in message:
        stopped_by = "objective"
    else:
        raise RuntimeError(f"optimizer stopped abnormally: {result.message}")

    weights = NetworkWeights.unpack(w0.n_inputs, w0.n_hidden, result.x)
    etas = forward_many(weights, x)
    loglik = pl.loglik(etas)
    return MatrixFit(
        weights=weights,
        baseline=breslow_baseline(d, e, etas),
        etas=etas,
        final_objective=float(result.fun),
        train_loglik=float(loglik),
        stopped_by=stopped_by,
        iterations=int(result.nit),
        objective_trace=tuple(trace) if record_trace else None,
    )


@dataclass(frozen=True)
class FittedModel:
    """Deployable prediction object: weights + baseline + codebook + config.

    train_etas and train_categories cache the training records' final risk
    scores and consolidated category indices (per codebook variable, -1 when
    the variable was absent), which is what partial-input prediction needs;
    they travel with the serialized model so a model file alone can serve.
    """

    weights: NetworkWeights
    baseline: BaselineHazard
    codebook: Codebook
    config: TrainConfig
    final_objective: float
    train_loglik: float
    stopped_by: str
    iterations: int
    train_etas: np.ndarray
    train_categories: np.ndarray  # (n_records, n_variables) int
    objective_trace: tuple[float, ...] | None = None  # not serialized

    @property
    def n_train(self) -> int:
        return int(self.train_etas.size)


def category_index_matrix(
    records, codebook: Codebook
) -> np.ndarray:
    """Consolidated category index per (record, codebook variable); -1 if absent."""
    n = len(records)
    out = np.full((n, len(codebook.variables)), -1, dtype=np.int32)
    lookup = {
        v: {c: i for i, c in enumerate(codebook.codings[v].categories)}
        for v in codebook.variables
    }
    for i, rec in enumerate(records):
        cats = consolidated_categories(rec, codebook)
        for j, v in enumerate(codebook.variables):
            if v in cats:
                out[i, j] = lookup[v][cats[v]]
    return out


def train(
    records,
    codebook: Codebook,
    config: TrainConfig,
    record_trace: bool = False,
) -> FittedModel:
    """Fit the network to claim records encoded through the codebook."""
    if len(records) < 2:
        raise ValueError("need at least 2 records to train")
    x = encode_many(records, codebook)
    d = np.asarray([r.duration_weeks for r in records], dtype=float)
    e = np.asarray([r.event for r in records], dtype=bool)
    fit = fit_matrix(x, d, e, config, record_trace=record_trace)
    return FittedModel(
        weights=fit.weights,
        baseline=fit.baseline,
        codebook=codebook,
        config=config,
        final_objective=fit.final_objective,
        train_loglik=fit.train_loglik,
        stopped_by=fit.stopped_by,
        iterations=fit.iterations,
        train_etas=fit.etas,
        train_categories=category_index_matrix(records, codebook),
        objective_trace=fit.objective_trace,
    )


def predict_eta(model: FittedModel, record: ClaimRecord) -> float:
    """Risk score for one claim record."""
    return forward(model.weights, encode(record, model.codebook))


def predict_etas(model: FittedModel, records) -> np.ndarray:
    if not len(records):
        return np.zeros(0)
    return forward_many(model.weights, encode_many(records, model.codebook))


def linear_information(x, durations, events, etas) -> np.ndarray:
    """Observed information of the partial likelihood for a linear risk score.

    x holds the slope columns only (no bias column; constants carry no
    information).  etas are the linear predictor values at the evaluation
    point.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    pl = PartialLikelihood(durations, events)
    eta = np.asarray(etas, dtype=float)[pl.order]
    xs = x[pl.order]
    m = float(np.max(eta))
    w = np.exp(eta - m)

    rev_w = np.cumsum(w[::-1])[::-1][pl.group_starts]
    rev_wx = np.cumsum((w[:, None] * xs)[::-1], axis=0)[::-1][pl.group_starts]
    wxx = w[:, None, None] * xs[:, :, None] * xs[:, None, :]
    rev_wxx = np.cumsum(wxx[::-1], axis=0)[::-1][pl.group_starts]

    dg = pl.death_groups
    deaths = pl.group_deaths[dg]
    s = rev_w[dg]
    mean_x = rev_wx[dg] / s[:, None]
    second = rev_wxx[dg] / s[:, None, None]
    info = np.einsum("g,gij->ij", deaths, second) - np.einsum(
        "g,gi,gj->ij", deaths, mean_x, mean_x
    )
    return info
