"""Censoring-aware survival primitives.

Kaplan-Meier product-limit curves, cumulative-hazard transforms, the Breslow
baseline hazard for a fitted risk score, survival-curve summaries, the
two-sample log-rank test and the generalized R-squared fit coefficient.
All tie handling pools deaths at a shared time against the full risk set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

# exp() overflows float64 just above this; risk scores must stay below it
MAX_SAFE_ETA = 700.0


@dataclass(frozen=True)
class SurvivalCurve:
    """Right-continuous step function S(t); S = 1 before the first time."""

    times: np.ndarray
    survival: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.survival, dtype=float)
        if t.shape != s.shape or t.ndim != 1:
            raise ValueError("times and survival must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(s < -1e-12) or np.any(s > 1 + 1e-12):
            raise ValueError("survival values must lie in [0, 1]")
        if np.any(np.diff(s) > 1e-12):
            raise ValueError("survival must be nonincreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "survival", s)

    def at(self, t: float) -> float:
        """S(t) by step lookup; 1 before the first jump."""
        idx = np.searchsorted(self.times, t, side="right") - 1
        return 1.0 if idx < 0 else float(self.survival[idx])


@dataclass(frozen=True)
class BaselineHazard:
    """Nondecreasing cumulative baseline hazard H0 at the event times."""

    times: np.ndarray
    cumulative_hazard: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        h = np.asarray(self.cumulative_hazard, dtype=float)
        if t.shape != h.shape or t.ndim != 1:
            raise ValueError("times and cumulative_hazard must match in shape")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(h < 0) or np.any(np.diff(h) < 0):
            raise ValueError("cumulative hazard must be nonnegative and nondecreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "cumulative_hazard", h)


def _check_lifetimes(durations, events) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(durations, dtype=float)
    e = np.asarray(events, dtype=bool)
    if d.ndim != 1 or d.shape != e.shape:
        raise ValueError("durations and events must be 1-d arrays of equal length")
    if d.size == 0:
        raise ValueError("empty lifetime input")
    return d, e


def kaplan_meier(durations, events) -> SurvivalCurve:
    """Product-limit estimate; censored at-time observations stay at risk."""
    d, e = _check_lifetimes(durations, events)
    order = np.argsort(d, kind="stable")
    d, e = d[order], e[order]
    times, starts = np.unique(d, return_index=True)
    n_total = d.size
    surv_times, surv = [], []
    s = 1.0
    for t, start in zip(times, starts):
        at_risk = n_total - start
        stop = np.searchsorted(d, t, side="right")
        deaths = int(e[start:stop].sum())
        if deaths > 0:
            s *= 1.0 - deaths / at_risk
            surv_times.append(float(t))
            surv.append(s)
    return SurvivalCurve(np.asarray(surv_times), np.asarray(surv))


def log_cumulative_hazard(curve: SurvivalCurve) -> tuple[np.ndarray, np.ndarray]:
    """log(-log S(t)) at event times; S=1 and S=0 points are omitted."""
    if curve.times.size == 0:
        raise ValueError("curve has no event times")
    keep = (curve.survival > 0) & (curve.survival < 1)
    if not np.any(keep):
        raise ValueError("curve has no times with 0 < S < 1")
    t = curve.times[keep]
    return t, np.log(-np.log(curve.survival[keep]))


def _risk_order(durations, events, etas):
    d, e = _check_lifetimes(durations, events)
    eta = np.asarray(etas, dtype=float)
    if eta.shape != d.shape:
        raise ValueError("etas must match durations in shape")
    if not np.all(np.isfinite(eta)):
        raise ValueError("etas must be finite")
    if float(np.max(eta)) > MAX_SAFE_ETA:
        raise OverflowError(
            f"exp(eta) overflows: max eta = {float(np.max(eta)):.3g}"
        )
    order = np.argsort(d, kind="stable")
    return d[order], e[order], eta[order]


def breslow_baseline(durations, events, etas) -> BaselineHazard:
    """Cumulative baseline hazard: sum over event times of d_i / sum_at_risk exp(eta)."""
    d, e, eta = _risk_order(durations, events, etas)
    m = float(np.max(eta))
    w = np.exp(eta - m)
    # risk-set sums: reverse cumulative sum, read at the first index of each time
    rev_cumsum = np.cumsum(w[::-1])[::-1]
    times, starts = np.unique(d, return_index=True)
    h_times, h_values = [], []
    h = 0.0
    for t, start in zip(times, starts):
        stop = np.searchsorted(d, t, side="right")
        deaths = int(e[start:stop].sum())
        if deaths > 0:
            h += deaths * np.exp(-m) / rev_cumsum[start]
            h_times.append(float(t))
            h_values.append(h)
    return BaselineHazard(np.asarray(h_times), np.asarray(h_values))


def survival_from_eta(baseline: BaselineHazard, eta: float) -> SurvivalCurve:
    """Proportional-hazards curve S(t) = exp(-H0(t) * exp(eta))."""
    if not np.isfinite(eta):
        raise ValueError(f"eta must be finite, got {eta}")
    if eta > MAX_SAFE_ETA:
        raise OverflowError(f"exp(eta) overflows: eta = {eta:.3g}")
    s = np.exp(-baseline.cumulative_hazard * np.exp(eta))
    return SurvivalCurve(baseline.times.copy(), s)


def curve_quantile(curve: SurvivalCurve, q: float) -> float | None:
    """Smallest time with S(t) <= 1-q, or None when the curve never gets there."""
    if not 0 < q < 1:
        raise ValueError(f"q must be in (0, 1), got {q}")
    hits = np.nonzero(curve.survival <= 1 - q + 1e-12)[0]
    if hits.size == 0:
        return None
    return float(curve.times[hits[0]])


def curve_mean(curve: SurvivalCurve) -> float:
    """Integral of S over [0, t_max]; mass beyond the last event time is dropped."""
    if curve.times.size == 0:
        return 0.0
    widths = np.diff(curve.times)
    return float(curve.times[0] + np.sum(curve.survival[:-1] * widths))


def curve_is_truncated(curve: SurvivalCurve, tol: float = 1e-9) -> bool:
    """True when the curve still has survival mass past its last event time."""
    return curve.times.size > 0 and float(curve.survival[-1]) > tol


def log_rank(group_a, group_b) -> tuple[float, float]:
    """Two-sample log-rank test; returns (chi-square statistic, p-value).

    Each group is a (durations, events) pair.  Deaths at a shared time are
    pooled against the combined risk set; p comes from the chi-square(1)
    upper tail.
    """
    da, ea = _check_lifetimes(*group_a)
    db, eb = _check_lifetimes(*group_b)
    if not (ea.any() or eb.any()):
        raise ValueError("no events in either group")
    d = np.concatenate([da, db])
    e = np.concatenate([ea, eb])
    in_a = np.concatenate([np.ones(da.size, bool), np.zeros(db.size, bool)])
    order = np.argsort(d, kind="stable")
    d, e, in_a = d[order], e[order], in_a[order]

    observed_a = 0.0
    expected_a = 0.0
    variance = 0.0
    times, starts = np.unique(d, return_index=True)
    rev_total = np.arange(d.size, 0, -1)  # at-risk counts in sorted order
    rev_a = np.cumsum(in_a[::-1])[::-1]
    for t, start in zip(times, starts):
        stop = np.searchsorted(d, t, side="right")
        deaths = int(e[start:stop].sum())
        if deaths == 0:
            continue
        n = int(rev_total[start])
        n_a = int(rev_a[start])
        deaths_a = int((e[start:stop] & in_a[start:stop]).sum())
        observed_a += deaths_a
        expected_a += deaths * n_a / n
        if n > 1:
            variance += deaths * (n_a / n) * (1 - n_a / n) * (n - deaths) / (n - 1)
    if variance <= 0:
        return 0.0, 1.0
    statistic = (observed_a - expected_a) ** 2 / variance
    p_value = float(stats.chi2.sf(statistic, df=1))
    return float(statistic), p_value


def generalized_r2(loglik_full: float, loglik_null: float, n: int) -> float:
    """Nagelkerke-style fit coefficient 1 - exp(-2 * (l_full - l_null) / n)."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    if loglik_full < loglik_null:
        warnings.warn(
            f"full log-likelihood {loglik_full:.6g} below null {loglik_null:.6g}; "
            "optimizer noise?",
            stacklevel=2,
        )
    return 1.0 - float(np.exp(-2.0 * (loglik_full - loglik_null) / n))
