"""Model-quality reports: calibration, interactions, diagnostics, time trend.

Every function here returns plain data (dataclasses over arrays) suitable for
delimited-text emission; rendering them as figures is the CLI layer's job.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .coxnet import FittedModel, TrainConfig, fit_matrix, linear_information
from .encoding import ClaimRecord, Codebook
from .partial_inputs import TrainingIndex, predict_method_a
from .survival import (
    SurvivalCurve,
    curve_mean,
    curve_quantile,
    kaplan_meier,
    log_cumulative_hazard,
    log_rank,
    survival_from_eta,
)


def rank_partition(values: np.ndarray, k: int) -> np.ndarray:
    """0-based k-quantile group per value; nearest-rank bounds, stable ties."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < k:
        raise ValueError(f"need at least {k} values, got {n}")
    order = np.argsort(values, kind="stable")
    bounds = [int(np.floor(n * i / k)) for i in range(k + 1)]
    group = np.empty(n, dtype=int)
    for g in range(k):
        group[order[bounds[g]:bounds[g + 1]]] = g
    return group


@dataclass(frozen=True)
class BoxStats:
    group: int  # 1-based decile index
    n: int
    minimum: float | None
    q1: float | None
    median: float | None
    q3: float | None
    maximum: float | None


def decile_summary(etas, durations, events) -> list[BoxStats]:
    """Boxplot stats of CLOSED-claim durations per predicted-duration decile.

    Deciles are taken over all records, ordered by the duration the risk
    score implies (decile 1 = highest score = shortest predicted duration);
    the summaries use closed claims only.
    """
    etas = np.asarray(etas, dtype=float)
    d = np.asarray(durations, dtype=float)
    e = np.asarray(events, dtype=bool)
    if int(e.sum()) < 10:
        raise ValueError("need at least 10 closed claims")
    group = rank_partition(-etas, 10)
    out = []
    for g in range(10):
        closed = d[(group == g) & e]
        if closed.size == 0:
            out.append(BoxStats(g + 1, 0, None, None, None, None, None))
            continue
        q1, med, q3 = np.percentile(closed, [25, 50, 75])
        out.append(BoxStats(
            group=g + 1, n=int(closed.size),
            minimum=float(closed.min()), q1=float(q1), median=float(med),
            q3=float(q3), maximum=float(closed.max()),
        ))
    return out


def quintile_table(etas, durations, events) -> np.ndarray:
    """Row-stochastic 5x5 matrix: predicted quintile -> actual closed-duration quintile.

    Closed claims only; open claims have no actual duration quintile.  Rows
    follow predicted duration (row 1 = highest risk score = shortest), so a
    well-ranked model concentrates mass on the diagonal.
    """
    etas = np.asarray(etas, dtype=float)
    d = np.asarray(durations, dtype=float)
    e = np.asarray(events, dtype=bool)
    if int(e.sum()) < 25:
        raise ValueError("need at least 25 closed claims")
    pred_group = rank_partition(-etas[e], 5)
    actual_group = rank_partition(d[e], 5)
    counts = np.zeros((5, 5))
    np.add.at(counts, (pred_group, actual_group), 1.0)
    return counts / counts.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class WindowPoint:
    summary: str  # "mean" | "q1" | "median" | "q3"
    predicted: float
    actual: float
    n: int


def moving_window_calibration(
    curves: Sequence[SurvivalCurve],
    durations,
    events,
    window: float = 1.0,
    grid_step: float = 0.5,
    min_records: int = 10,
) -> list[WindowPoint]:
    """Predicted vs actual distribution summaries in moving one-week windows.

    For each record the predicted mean and quartiles come from its own curve;
    the actual summary at a grid point is the Kaplan-Meier summary over all
    records whose predicted value falls in the window centered there.
    Windows holding fewer than `min_records` records are skipped.
    """
    d = np.asarray(durations, dtype=float)
    e = np.asarray(events, dtype=bool)
    if len(curves) != d.size:
        raise ValueError("one curve per record required")
    if d.size < 50:
        raise ValueError("need at least 50 records")

    predicted = {
        "mean": np.asarray([curve_mean(c) for c in curves], dtype=float),
        "q1": np.asarray([_q_or_nan(c, 0.25) for c in curves], dtype=float),
        "median": np.asarray([_q_or_nan(c, 0.5) for c in curves], dtype=float),
        "q3": np.asarray([_q_or_nan(c, 0.75) for c in curves], dtype=float),
    }
    out: list[WindowPoint] = []
    half = window / 2.0
    for name, values in predicted.items():
        usable = np.isfinite(values)
        if not usable.any():
            continue
        lo, hi = float(values[usable].min()), float(values[usable].max())
        grid = np.arange(lo, hi + grid_step / 2, grid_step)
        for center in grid:
            members = usable & (np.abs(values - center) <= half)
            n = int(members.sum())
            if n < min_records or not e[members].any():
                continue
            km = kaplan_meier(d[members], e[members])
            actual = curve_mean(km) if name == "mean" else \
                curve_quantile(km, {"q1": 0.25, "median": 0.5, "q3": 0.75}[name])
            if actual is None:
                continue
            out.append(WindowPoint(
                summary=name, predicted=float(center), actual=float(actual), n=n,
            ))
    return out


def _q_or_nan(curve: SurvivalCurve, q: float) -> float:
    v = curve_quantile(curve, q)
    return float("nan") if v is None else v


@dataclass(frozen=True)
class InteractionRow:
    code: str
    favored_group: str  # group with longer durations
    p_value: float


@dataclass(frozen=True)
class InteractionReport:
    code_variable: str
    group_variable: str
    groups: tuple[str, str]
    rows: tuple[InteractionRow, ...]  # significant codes only, ordered by p
    n_codes_total: int
    n_codes_qualifying: int


def interaction_analysis(
    records: Sequence[ClaimRecord],
    codebook: Codebook,
    code_var: str,
    group_var: str,
    min_per_group: int = 10,
    alpha: float = 0.05,
) -> InteractionReport:
    """Log-rank scan for codes whose duration ordering differs between groups."""
    groups = _binary_groups(records, codebook, group_var)
    by_code: dict[str, list[ClaimRecord]] = {}
    for rec in records:
        token = rec.covariates.get(code_var)
        if token is None:
            continue
        by_code.setdefault(codebook.resolve(code_var, token), []).append(rec)

    rows = []
    qualifying = 0
    for code in sorted(by_code):
        members = by_code[code]
        a = _lifetimes([r for r in members
                        if codebook.resolve(group_var, r.covariates.get(group_var, ""))
                        == groups[0]])
        b = _lifetimes([r for r in members
                        if codebook.resolve(group_var, r.covariates.get(group_var, ""))
                        == groups[1]])
        if a[0].size < min_per_group or b[0].size < min_per_group:
            continue
        if not (a[1].any() or b[1].any()):
            continue
        qualifying += 1
        _, p = log_rank(a, b)
        if p <= alpha:
            rows.append(InteractionRow(
                code=code, favored_group=_longer_group(a, b, groups), p_value=p,
            ))
    rows.sort(key=lambda r: (r.p_value, r.code))
    return InteractionReport(
        code_variable=code_var,
        group_variable=group_var,
        groups=groups,
        rows=tuple(rows),
        n_codes_total=len(by_code),
        n_codes_qualifying=qualifying,
    )


def _binary_groups(records, codebook, group_var) -> tuple[str, str]:
    seen = set()
    for rec in records:
        token = rec.covariates.get(group_var)
        if token is not None:
            seen.add(codebook.resolve(group_var, token))
    if len(seen) != 2:
        raise ValueError(
            f"{group_var} must be binary after consolidation, got {sorted(seen)}"
        )
    ordered = tuple(sorted(seen))
    return ordered  # difference convention: second minus first


def _lifetimes(records) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.asarray([r.duration_weeks for r in records], dtype=float),
        np.asarray([r.event for r in records], dtype=bool),
    )


def _longer_group(a, b, groups) -> str:
    med_a = _km_median_or_inf(a)
    med_b = _km_median_or_inf(b)
    if med_a != med_b:
        return groups[0] if med_a > med_b else groups[1]
    mean_a = curve_mean(kaplan_meier(*a))
    mean_b = curve_mean(kaplan_meier(*b))
    return groups[0] if mean_a >= mean_b else groups[1]


def _km_median_or_inf(lifetimes) -> float:
    med = curve_quantile(kaplan_meier(*lifetimes), 0.5)
    return float("inf") if med is None else med


@dataclass(frozen=True)
class SexDifferenceRow:
    code: str
    actual_difference: float
    predicted_difference: float


@dataclass(frozen=True)
class SexDifferenceReport:
    code_variable: str
    groups: tuple[str, str]  # differences are groups[1] minus groups[0]
    rows: tuple[SexDifferenceRow, ...]
    n_codes: int
    n_sign_agreements: int
    kendall_tau: float
    p_value: float


def sex_difference_concordance(
    model: FittedModel,
    records: Sequence[ClaimRecord],
    code_var: str,
    min_per_group: int = 10,
) -> SexDifferenceReport:
    """Actual vs Method-A-predicted between-sex median differences per code.

    Codes with under `min_per_group` records in either sex, with no actual
    median difference, or with medians beyond curve support are excluded.
    """
    codebook = model.codebook
    groups = _binary_groups(records, codebook, "SEX")
    index = TrainingIndex.from_records(model, records)

    by_code: dict[str, dict[str, list[ClaimRecord]]] = {}
    for rec in records:
        token = rec.covariates.get(code_var)
        sex_token = rec.covariates.get("SEX")
        if token is None or sex_token is None:
            continue
        code = codebook.resolve(code_var, token)
        sex = codebook.resolve("SEX", sex_token)
        by_code.setdefault(code, {}).setdefault(sex, []).append(rec)

    rows = []
    for code in sorted(by_code):
        per_sex = by_code[code]
        if any(len(per_sex.get(g, [])) < min_per_group for g in groups):
            continue
        actual = [curve_quantile(kaplan_meier(*_lifetimes(per_sex[g])), 0.5)
                  for g in groups]
        if None in actual:
            continue
        actual_diff = actual[1] - actual[0]
        if actual_diff == 0:
            continue
        predicted = []
        for g in groups:
            pred = predict_method_a({code_var: code, "SEX": g}, model, index=index)
            predicted.append(curve_quantile(pred.curve, 0.5))
        if None in predicted:
            continue
        rows.append(SexDifferenceRow(
            code=code,
            actual_difference=float(actual_diff),
            predicted_difference=float(predicted[1] - predicted[0]),
        ))
    if len(rows) < 3:
        raise ValueError(f"only {len(rows)} qualifying codes; need at least 3")

    actual = np.asarray([r.actual_difference for r in rows])
    predicted = np.asarray([r.predicted_difference for r in rows])
    agreements = int(np.sum(np.sign(actual) == np.sign(predicted)))
    tau, p = stats.kendalltau(actual, predicted)
    return SexDifferenceReport(
        code_variable=code_var,
        groups=groups,
        rows=tuple(rows),
        n_codes=len(rows),
        n_sign_agreements=agreements,
        kendall_tau=float(tau),
        p_value=float(p),
    )


@dataclass(frozen=True)
class CategoryHazardCurve:
    category: str
    n: int
    times: np.ndarray
    log_cumulative_hazard: np.ndarray


def ph_diagnostic(
    records: Sequence[ClaimRecord], codebook: Codebook, variable: str
) -> list[CategoryHazardCurve]:
    """Per-category log cumulative hazard steps for visual parallel-curve checks."""
    by_cat: dict[str, list[ClaimRecord]] = {}
    for rec in records:
        token = rec.covariates.get(variable)
        if token is not None:
            by_cat.setdefault(codebook.resolve(variable, token), []).append(rec)
    out = []
    for cat in sorted(by_cat):
        d, e = _lifetimes(by_cat[cat])
        if not e.any():
            continue  # no events: cumulative hazard never leaves zero
        curve = kaplan_meier(d, e)
        usable = (curve.survival > 0) & (curve.survival < 1)
        if not usable.any():
            continue
        times, values = log_cumulative_hazard(curve)
        out.append(CategoryHazardCurve(
            category=cat, n=len(by_cat[cat]), times=times,
            log_cumulative_hazard=values,
        ))
    if not out:
        raise ValueError(f"no category of {variable} has events")
    return out


# ---------------------------------------------------------------------------
# long-term trend: piecewise-linear Cox regression of duration on open date
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrendGridPoint:
    open_date: dt.date
    weeks: float
    eta: float
    mean: float
    median: float | None


@dataclass(frozen=True)
class QuarterSummary:
    year: int
    quarter: int  # 1..4
    n: int
    censor_rate: float
    naive_mean: float  # censoring ignored
    naive_median: float


@dataclass(frozen=True)
class TimeTrendReport:
    origin: dt.date
    knot_weeks: tuple[float, ...]
    coefficients: tuple[float, ...]  # slope, then one slope change per knot
    standard_errors: tuple[float, ...]
    grid: tuple[TrendGridPoint, ...]
    quarters: tuple[QuarterSummary, ...]
    eventless_quarters: tuple[tuple[int, int], ...]


def _quarter_of(date: dt.date) -> tuple[int, int]:
    return date.year, (date.month - 1) // 3 + 1


def _quarter_end(year: int, quarter: int) -> dt.date:
    month = quarter * 3
    last_day = {3: 31, 6: 30, 9: 30, 12: 31}[month]
    return dt.date(year, month, last_day)


def _next_quarter(year: int, quarter: int) -> tuple[int, int]:
    return (year + 1, 1) if quarter == 4 else (year, quarter + 1)


def hinge_basis(weeks: np.ndarray, knot_weeks: Sequence[float]) -> np.ndarray:
    """Continuous piecewise-linear basis: time plus one hinge per knot."""
    weeks = np.asarray(weeks, dtype=float)
    columns = [weeks]
    for k in knot_weeks:
        columns.append(np.maximum(0.0, weeks - k))
    return np.column_stack(columns)


def fit_time_trend(
    records: Sequence[ClaimRecord],
    grid_step_weeks: float = 1.0,
) -> TimeTrendReport:
    """Censoring-aware duration trend over open date, with naive comparisons.

    Fits a linear Cox model whose covariates are the continuous hinge basis of
    open date with knots at the ends of calendar quarters, then reads mean and
    median durations off the baseline shifted by the fitted risk score.
    Quarterly mean/median/censor-rate summaries that ignore censoring are
    attached for comparison.
    """
    if not records:
        raise ValueError("no records")
    dates = [r.open_date for r in records]
    origin, last = min(dates), max(dates)
    if _quarter_of(origin) == _quarter_of(last):
        raise ValueError("records must span at least two quarters")

    knots: list[float] = []
    year, quarter = _quarter_of(origin)
    while True:
        end = _quarter_end(year, quarter)
        if end >= last:
            break
        if end > origin:
            knots.append((end - origin).days / 7.0)
        year, quarter = _next_quarter(year, quarter)

    weeks = np.asarray([(date - origin).days / 7.0 for date in dates])
    basis = hinge_basis(weeks, knots)
    durations = np.asarray([r.duration_weeks for r in records], dtype=float)
    events = np.asarray([r.event for r in records], dtype=bool)

    quarters, eventless = _quarterly_summaries(records)
    for yq in eventless:
        warnings.warn(f"quarter {yq[0]}Q{yq[1]} has no closed claims", stacklevel=2)

    config = TrainConfig(decay=0.0, bias_decay=0.0, n_hidden=0,
                         tolerance=1e-12, gradient_tolerance=1e-8,
                         max_iterations=2000, seed=0)
    centered = basis - basis.mean(axis=0, keepdims=True)
    fit = fit_matrix(centered, durations, events, config)
    beta = fit.weights.w_in_out[1:]
    info = linear_information(centered, durations, events, fit.etas)
    covariance = np.linalg.pinv(info)
    se = np.sqrt(np.clip(np.diag(covariance), 0.0, None))

    span = (last - origin).days / 7.0
    grid_weeks = np.arange(0.0, span + grid_step_weeks / 2, grid_step_weeks)
    grid_basis = hinge_basis(grid_weeks, knots) - basis.mean(axis=0, keepdims=True)
    grid_etas = grid_basis @ beta + fit.weights.w_in_out[0]
    # the bias weight is already inside the baseline's risk sums; the curve
    # shift below must apply exactly the same eta the training records carried
    grid = []
    for w, eta in zip(grid_weeks, grid_etas):
        curve = survival_from_eta(fit.baseline, float(eta))
        grid.append(TrendGridPoint(
            open_date=origin + dt.timedelta(days=round(w * 7)),
            weeks=float(w),
            eta=float(eta),
            mean=curve_mean(curve),
            median=curve_quantile(curve, 0.5),
        ))
    return TimeTrendReport(
        origin=origin,
        knot_weeks=tuple(knots),
        coefficients=tuple(float(b) for b in beta),
        standard_errors=tuple(float(s) for s in se),
        grid=tuple(grid),
        quarters=quarters,
        eventless_quarters=eventless,
    )


def _quarterly_summaries(records) -> tuple[tuple[QuarterSummary, ...],
                                           tuple[tuple[int, int], ...]]:
    by_quarter: dict[tuple[int, int], list[ClaimRecord]] = {}
    for rec in records:
        by_quarter.setdefault(_quarter_of(rec.open_date), []).append(rec)
    summaries = []
    eventless = []
    for yq in sorted(by_quarter):
        members = by_quarter[yq]
        d = np.asarray([r.duration_weeks for r in members])
        e = np.asarray([r.event for r in members], dtype=bool)
        if not e.any():
            eventless.append(yq)
        summaries.append(QuarterSummary(
            year=yq[0], quarter=yq[1], n=len(members),
            censor_rate=float(1.0 - e.mean()),
            naive_mean=float(d.mean()),
            naive_median=float(np.median(d)),
        ))
    return tuple(summaries), tuple(eventless)
