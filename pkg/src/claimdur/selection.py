"""Model selection: train/test split, held-out scoring and the grid search.

A candidate model is scored by computing its risk score on every test record
and refitting a one-parameter Cox model on the test data with that score as
the sole covariate; the generalized R-squared of the refit (one degree of
freedom, so insensitive to overfitting) is the selection criterion.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .coxnet import (
    FittedModel,
    PartialLikelihood,
    TrainConfig,
    linear_information,
    predict_etas,
    train,
)
from .encoding import ClaimRecord, build_codebook
from .survival import generalized_r2

# variable subsets explored by the selection procedure
REDUCED_SUBSET = ("AGE", "SEX", "POB")
FULL_SUBSET = ("NOI", "POB", "SOI", "TOA", "AGE", "SEX", "SIC", "OCC", "PAY", "CPC")
DEFAULT_SUBSETS: Mapping[str, tuple[str, ...]] = {
    "R": REDUCED_SUBSET,
    "F": FULL_SUBSET,
}

DEFAULT_LAMBDAS = (0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0)
DEFAULT_HIDDEN_SIZES = (0, 2, 4, 8, 12, 14)


def split(
    records: Sequence[ClaimRecord], n_train: int, seed: int = 0
) -> tuple[list[ClaimRecord], list[ClaimRecord]]:
    """Uniform random partition without replacement, deterministic per seed."""
    n = len(records)
    if not 0 < n_train < n:
        raise ValueError(f"n_train must be in (0, {n}), got {n_train}")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return [records[i] for i in train_idx], [records[i] for i in test_idx]


def _newton_univariate(
    z: np.ndarray, durations: np.ndarray, events: np.ndarray,
    max_iterations: int = 100, tol: float = 1e-10,
) -> tuple[float, float, float]:
    """One-parameter Cox fit by Newton-Raphson on the Breslow partial likelihood.

    Returns (beta, loglik_full, loglik_null).
    """
    pl = PartialLikelihood(durations, events)
    loglik_null = pl.loglik(np.zeros_like(z))
    beta = 0.0
    loglik = loglik_null
    for _ in range(max_iterations):
        value, grad_eta = pl.loglik_and_grad(beta * z)
        score = float(grad_eta @ z)
        info = float(linear_information(z[:, None], durations, events, beta * z)[0, 0])
        if info <= 1e-12:
            break
        step = score / info
        if abs(score) < tol and abs(step) < 1e-8:
            loglik = value
            break
        # halve the step until the likelihood does not decrease
        new_beta = beta + step
        new_value = pl.loglik(new_beta * z)
        halvings = 0
        while new_value < value - 1e-12 and halvings < 30:
            step *= 0.5
            new_beta = beta + step
            new_value = pl.loglik(new_beta * z)
            halvings += 1
        beta, loglik = new_beta, new_value
    return beta, loglik, loglik_null


def univariate_refit_r2(etas, durations, events) -> float:
    """Generalized R-squared of the one-covariate Cox refit of given risk scores."""
    z = np.asarray(etas, dtype=float)
    d = np.asarray(durations, dtype=float)
    e = np.asarray(events, dtype=bool)
    if z.size == 0:
        raise ValueError("no test records")
    if not e.any():
        raise ValueError("no events in the test data")
    if float(np.ptp(z)) < 1e-12:
        warnings.warn("risk score is constant on the test data; R^2 = 0",
                      stacklevel=2)
        return 0.0
    z = z - float(np.mean(z))  # shift-invariant; keeps exp(beta*z) well-scaled
    _, loglik_full, loglik_null = _newton_univariate(z, d, e)
    return generalized_r2(loglik_full, loglik_null, z.size)


def score_model(model: FittedModel, test: Sequence[ClaimRecord]) -> float:
    """Held-out generalized R-squared of a fitted model on test records."""
    etas = predict_etas(model, test)
    d = np.asarray([r.duration_weeks for r in test], dtype=float)
    e = np.asarray([r.event for r in test], dtype=bool)
    return univariate_refit_r2(etas, d, e)


@dataclass(frozen=True)
class GridEntry:
    subset: str
    decay: float
    n_hidden: int
    r2: float | None
    iterations: int | None
    seconds: float
    objective: float | None
    error: str | None = None


@dataclass(frozen=True)
class GridResult:
    entries: tuple[GridEntry, ...]
    best: GridEntry | None

    def best_model_config(self) -> tuple[str, TrainConfig] | None:
        if self.best is None:
            return None
        return self.best.subset, TrainConfig(
            decay=self.best.decay, n_hidden=self.best.n_hidden
        )


def _entry_rank(entry: GridEntry) -> tuple:
    # maximize r2; ties prefer fewer hidden nodes, then stronger decay
    return (-entry.r2, entry.n_hidden, -entry.decay)


def grid_search(
    train_records: Sequence[ClaimRecord],
    test_records: Sequence[ClaimRecord],
    subsets: Mapping[str, Sequence[str]] | None = None,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    hidden_sizes: Sequence[int] = DEFAULT_HIDDEN_SIZES,
    seed: int = 0,
    min_count: int = 10,
    max_iterations: int = 500,
) -> GridResult:
    """Train and score one model per (subset, decay, hidden-size) configuration.

    Codebooks are built from the training records only, restricted to each
    subset's variables.  A configuration that fails is recorded with its
    error and skipped, not fatal.
    """
    if subsets is None:
        subsets = DEFAULT_SUBSETS
    if not subsets or not len(lambdas) or not len(hidden_sizes):
        raise ValueError("empty grid")
    entries: list[GridEntry] = []
    for subset_name, variables in subsets.items():
        codebook = build_codebook(train_records, min_count=min_count,
                                  variables=variables)
        for lam in lambdas:
            for n_hidden in hidden_sizes:
                started = time.perf_counter()
                try:
                    config = TrainConfig(
                        decay=float(lam), n_hidden=int(n_hidden), seed=seed,
                        max_iterations=max_iterations,
                    )
                    model = train(train_records, codebook, config)
                    r2 = score_model(model, test_records)
                    entries.append(GridEntry(
                        subset=subset_name, decay=float(lam),
                        n_hidden=int(n_hidden), r2=float(r2),
                        iterations=model.iterations,
                        seconds=time.perf_counter() - started,
                        objective=model.final_objective,
                    ))
                except Exception as exc:  # isolate failing configurations
                    entries.append(GridEntry(
                        subset=subset_name, decay=float(lam),
                        n_hidden=int(n_hidden), r2=None, iterations=None,
                        seconds=time.perf_counter() - started,
                        objective=None, error=f"{type(exc).__name__}: {exc}",
                    ))
    scored = [e for e in entries if e.r2 is not None]
    best = min(scored, key=_entry_rank) if scored else None
    return GridResult(entries=tuple(entries), best=best)


def main_effects_fit(
    train_records: Sequence[ClaimRecord],
    variables: Sequence[str],
    min_count: int = 10,
    seed: int = 0,
) -> FittedModel:
    """Factor-coded linear Cox fit: the no-hidden-node, no-decay network."""
    codebook = build_codebook(train_records, min_count=min_count,
                              variables=variables)
    config = TrainConfig(decay=0.0, bias_decay=0.0, n_hidden=0, seed=seed)
    return train(train_records, codebook, config)


@dataclass(frozen=True)
class StepwiseStep:
    variable: str
    df: int  # identifiable factor parameters the variable adds
    loglik: float
    lr_chi2: float
    p_value: float


def stepwise_lr_report(
    records: Sequence[ClaimRecord],
    variables: Sequence[str] | None = None,
    min_count: int = 10,
    seed: int = 0,
) -> list[StepwiseStep]:
    """Likelihood-ratio chi-squares from adding predictors successively.

    Main-effects Cox fits over a growing variable subset; each step reports
    twice the log-likelihood gain over the previous step against a
    chi-square with one degree of freedom per added category beyond the
    first.  A motivation report, not a selection procedure.
    """
    from scipy import stats

    if variables is None:
        from .encoding import VARIABLES

        variables = [v for v in VARIABLES
                     if any(v in r.covariates for r in records)]
    if not variables:
        raise ValueError("no variables to add")
    durations = np.asarray([r.duration_weeks for r in records], dtype=float)
    events = np.asarray([r.event for r in records], dtype=bool)
    previous = PartialLikelihood(durations, events).loglik(
        np.zeros(len(records)))
    steps = []
    for k in range(1, len(variables) + 1):
        subset = variables[:k]
        model = main_effects_fit(records, subset, min_count=min_count,
                                 seed=seed)
        seen = {model.codebook.resolve(variables[k - 1], r.covariates[variables[k - 1]])
                for r in records if variables[k - 1] in r.covariates}
        df = max(1, len(seen) - 1)
        lr = max(0.0, 2.0 * (model.train_loglik - previous))
        steps.append(StepwiseStep(
            variable=variables[k - 1],
            df=df,
            loglik=model.train_loglik,
            lr_chi2=lr,
            p_value=float(stats.chi2.sf(lr, df)),
        ))
        previous = model.train_loglik
    return steps


def write_grid(path, result: GridResult) -> None:
    """Delimited grid report: subset, lambda, n_h, r2, iterations, seconds."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subset", "lambda", "n_hidden", "r2", "iterations",
                         "seconds", "error"])
        for e in result.entries:
            writer.writerow([
                e.subset, e.decay, e.n_hidden,
                "" if e.r2 is None else repr(e.r2),
                "" if e.iterations is None else e.iterations,
                f"{e.seconds:.3f}", e.error or "",
            ])
