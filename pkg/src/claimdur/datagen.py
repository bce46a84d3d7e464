"""Synthetic claims with a known proportional-hazards ground truth.

Durations are drawn by inverse-transform sampling from a configured baseline
hazard scaled by exp(eta*), where eta* sums per-category main effects,
optional pairwise interaction effects and an optional open-date trend.
Censoring is administrative: a claim still open at the capture date is
censored at the capture date.  The true per-record eta* is returned alongside
the records so tests can score models against a known ceiling.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .encoding import VARIABLES, ClaimRecord

DEFAULT_CAPTURE_DATE = dt.date(2009, 12, 31)


@dataclass(frozen=True)
class Category:
    """One sampled category: its raw token, sampling weight and log-hazard effect."""

    label: str
    probability: float
    effect: float = 0.0


@dataclass(frozen=True)
class Interaction:
    """Extra log-hazard effect when both categories are present."""

    variable_a: str
    category_a: str
    variable_b: str
    category_b: str
    effect: float


@dataclass(frozen=True)
class ExponentialBaseline:
    rate: float

    def inverse_cumulative_hazard(self, h: np.ndarray) -> np.ndarray:
        return h / self.rate

    def cumulative_hazard(self, t: np.ndarray) -> np.ndarray:
        return self.rate * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class WeibullBaseline:
    shape: float
    scale: float

    def inverse_cumulative_hazard(self, h: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(h, dtype=float) ** (1.0 / self.shape)

    def cumulative_hazard(self, t: np.ndarray) -> np.ndarray:
        return (np.asarray(t, dtype=float) / self.scale) ** self.shape


@dataclass(frozen=True)
class GeneratorConfig:
    variables: Mapping[str, tuple[Category, ...]]
    baseline: ExponentialBaseline | WeibullBaseline
    interactions: tuple[Interaction, ...] = ()
    trend_per_week: float = 0.0  # eta drift per week of open date, from window start
    n_records: int = 1000
    seed: int = 0
    capture_date: dt.date = DEFAULT_CAPTURE_DATE
    open_window_weeks: float = 156.0
    censoring: bool = True
    target_censor_fraction: float | None = None  # calibrates the window span

    def __post_init__(self):
        for name, cats in self.variables.items():
            if name not in VARIABLES:
                raise ValueError(f"unknown variable {name!r}")
            total = sum(c.probability for c in cats)
            if not np.isclose(total, 1.0, atol=1e-9):
                raise ValueError(f"{name} probabilities sum to {total}, not 1")
        if isinstance(self.baseline, ExponentialBaseline) and self.baseline.rate <= 0:
            raise ValueError("baseline rate must be positive")
        if isinstance(self.baseline, WeibullBaseline) and (
            self.baseline.shape <= 0 or self.baseline.scale <= 0
        ):
            raise ValueError("Weibull shape and scale must be positive")
        if self.n_records < 1:
            raise ValueError("n_records must be positive")
        f = self.target_censor_fraction
        if f is not None and not (0.0 < f < 1.0):
            raise ValueError(f"target censor fraction {f} not attainable")
        if f is not None and self.trend_per_week != 0.0:
            raise ValueError(
                "censor-fraction calibration rescales the open window and "
                "cannot combine with an open-date trend"
            )


def generate(config: GeneratorConfig) -> tuple[list[ClaimRecord], np.ndarray]:
    """Draw records and their true risk scores, deterministically per seed."""
    rng = np.random.default_rng(config.seed)
    n = config.n_records
    ordered_vars = [v for v in VARIABLES if v in config.variables]

    labels: dict[str, list[str]] = {}
    draws: dict[str, np.ndarray] = {}
    eta = np.zeros(n)
    for var in ordered_vars:
        cats = config.variables[var]
        idx = rng.choice(len(cats), size=n, p=[c.probability for c in cats])
        draws[var] = idx
        labels[var] = [c.label for c in cats]
        eta += np.asarray([c.effect for c in cats])[idx]

    for inter in config.interactions:
        ia = labels[inter.variable_a].index(inter.category_a)
        ib = labels[inter.variable_b].index(inter.category_b)
        both = (draws[inter.variable_a] == ia) & (draws[inter.variable_b] == ib)
        eta += inter.effect * both

    offsets_unit = rng.uniform(1e-9, 1.0, size=n)  # fraction of window before capture
    exp_draws = rng.exponential(1.0, size=n)

    window = config.open_window_weeks
    if config.trend_per_week != 0.0:
        eta = eta + config.trend_per_week * (1.0 - offsets_unit) * window
    true_durations = config.baseline.inverse_cumulative_hazard(
        exp_draws / np.exp(eta)
    )

    if config.censoring and config.target_censor_fraction is not None:
        window = _calibrated_window(
            true_durations, offsets_unit, config.target_censor_fraction
        )

    offset_days = np.maximum(1, np.round(offsets_unit * window * 7.0).astype(int))
    available_weeks = offset_days / 7.0

    if config.censoring:
        events = true_durations <= available_weeks
        durations = np.minimum(true_durations, available_weeks)
    else:
        events = np.ones(n, dtype=bool)
        durations = true_durations

    records = []
    for i in range(n):
        cov = {var: labels[var][draws[var][i]] for var in ordered_vars}
        records.append(
            ClaimRecord(
                covariates=cov,
                duration_weeks=float(durations[i]),
                event=bool(events[i]),
                open_date=config.capture_date - dt.timedelta(days=int(offset_days[i])),
            )
        )
    return records, eta


def _calibrated_window(
    true_durations: np.ndarray, offsets_unit: np.ndarray, fraction: float
) -> float:
    """Window span realizing exactly round(fraction * n) censored records.

    A record is censored iff its duration exceeds its open offset, i.e. iff
    the window is below duration/offset; picking the span between the right
    order statistics of that ratio hits the target count exactly.
    """
    n = true_durations.size
    k = int(round(fraction * n))
    if k < 1 or k >= n:
        raise ValueError(
            f"target censor fraction {fraction} not attainable with {n} records"
        )
    ratios = np.sort(true_durations / offsets_unit)
    low, high = ratios[n - k - 1], ratios[n - k]
    if high <= low:
        raise ValueError(f"target censor fraction {fraction} not attainable (ties)")
    return float(0.5 * (low + high))


def write_oracle(path, etas: np.ndarray) -> None:
    """Sidecar true-risk-score file: record index -> eta*."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record", "eta_star"])
        for i, v in enumerate(etas):
            writer.writerow([i, repr(float(v))])


def read_oracle(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return np.asarray([float(row["eta_star"]) for row in reader])


def oracle_r2(records: Sequence[ClaimRecord], etas: np.ndarray) -> float:
    """Generalized R-squared of the univariate refit using the TRUE risk score.

    This is the ceiling against which fitted models are judged.
    """
    from .selection import univariate_refit_r2

    d = np.asarray([r.duration_weeks for r in records], dtype=float)
    e = np.asarray([r.event for r in records], dtype=bool)
    return univariate_refit_r2(np.asarray(etas, dtype=float), d, e)


# ---------------------------------------------------------------------------
# reference configurations used by the acceptance suite
# ---------------------------------------------------------------------------

def _spread(labels: Sequence[str], probs: Sequence[float], effects: Sequence[float]):
    return tuple(
        Category(label=l, probability=p, effect=e)
        for l, p, e in zip(labels, probs, effects)
    )


_POB_CODES_6 = ("21000", "23000", "34000", "42000", "51000", "62000")
_POB_CODES_15 = (
    "21000", "22000", "23000", "24000", "31000",
    "32000", "34000", "41000", "42000", "51000",
    "52000", "61000", "62000", "71000", "81000",
)
_TOA_CODES = ("11000", "12000", "13000", "14000", "15000")
_AGE_VALUES = ("23", "34", "43", "55")


def linear_v1(n_records: int = 200, seed: int = 11) -> GeneratorConfig:
    """Main effects only, three variables; no interactions."""
    return GeneratorConfig(
        variables={
            "POB": _spread(
                _POB_CODES_6,
                (0.22, 0.2, 0.18, 0.16, 0.14, 0.1),
                (-0.6, -0.3, 0.0, 0.25, 0.5, 0.8),
            ),
            "SEX": _spread(("F", "M"), (0.4, 0.6), (0.35, 0.0)),
            "AGE": _spread(_AGE_VALUES, (0.25, 0.25, 0.25, 0.25),
                           (0.0, 0.15, 0.3, 0.5)),
        },
        baseline=ExponentialBaseline(rate=0.12),
        n_records=n_records,
        seed=seed,
        target_censor_fraction=0.2,
    )


def interaction_v1(n_records: int = 12000, seed: int = 23) -> GeneratorConfig:
    """Main effects plus strong code-by-sex interactions of alternating sign.

    The Weibull shape keeps durations light-tailed: the partial likelihood
    (hence fitted scores and rank calibration) only sees duration ranks, while
    relative errors of time-scale summaries stay bounded in moving windows.
    """
    scale = 0.85
    pob_effects = tuple(x * scale for x in (
        -0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4,
        0.5, 0.6, -0.25, 0.15, 0.35,
    ))
    interactions = []
    signs = (1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1)
    sizes = (1.0, 0.9, 1.0, 0.8, 0.9, 1.0, 0.8, 0.9, 1.0, 0.8, 0.9, 1.0)
    for code, sign, size in zip(_POB_CODES_15[:12], signs, sizes):
        interactions.append(
            Interaction(
                variable_a="POB", category_a=code,
                variable_b="SEX", category_b="F",
                effect=sign * size * scale,
            )
        )
    return GeneratorConfig(
        variables={
            "POB": _spread(_POB_CODES_15, (1 / 15.0,) * 15, pob_effects),
            "TOA": _spread(_TOA_CODES, (0.3, 0.25, 0.2, 0.15, 0.1),
                           tuple(x * scale for x in (-0.2, -0.1, 0.0, 0.1, 0.2))),
            "SEX": _spread(("F", "M"), (0.45, 0.55), (0.25 * scale, 0.0)),
            "AGE": _spread(_AGE_VALUES, (0.25, 0.25, 0.25, 0.25),
                           tuple(x * scale for x in (0.0, 0.1, 0.25, 0.4))),
        },
        baseline=WeibullBaseline(shape=2.0, scale=6.0),
        interactions=tuple(interactions),
        n_records=n_records,
        seed=seed,
        target_censor_fraction=0.15,
    )


def null_v1(n_records: int = 5000, seed: int = 31) -> GeneratorConfig:
    """No covariate effects at all; duration is independent of every input."""
    return GeneratorConfig(
        variables={
            "POB": _spread(_POB_CODES_6, (1 / 6.0,) * 6, (0.0,) * 6),
            "SEX": _spread(("F", "M"), (0.5, 0.5), (0.0, 0.0)),
        },
        baseline=ExponentialBaseline(rate=0.2),
        n_records=n_records,
        seed=seed,
        target_censor_fraction=0.15,
    )


def trend_v1(n_records: int = 6000, seed: int = 41) -> GeneratorConfig:
    """Hazard falls with open date (durations rise); heavy recent censoring."""
    return GeneratorConfig(
        variables={
            "SEX": _spread(("F", "M"), (0.5, 0.5), (0.0, 0.0)),
        },
        baseline=ExponentialBaseline(rate=0.45),
        trend_per_week=-0.004,
        n_records=n_records,
        seed=seed,
        open_window_weeks=156.0,
        censoring=True,
    )


PRESETS = {
    "linear-v1": linear_v1,
    "interaction-v1": interaction_v1,
    "null-v1": null_v1,
    "trend-v1": trend_v1,
}


def preset(name: str, n_records: int | None = None, seed: int | None = None
           ) -> GeneratorConfig:
    """Named reference configuration, optionally resized or reseeded."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    config = PRESETS[name]()
    if n_records is not None:
        config = replace(config, n_records=n_records)
    if seed is not None:
        config = replace(config, seed=seed)
    return config
