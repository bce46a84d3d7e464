"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.  The heavyweight fixtures (the interaction dataset,
its grid search and selected model) are module-scoped and shared.
"""

import time

import numpy as np
import pytest

from claimdur import datagen as dg
from claimdur import encoding, evaluation as ev, model_io, partial_inputs as pi
from claimdur import selection as sel
from claimdur import survival as sv
from claimdur.coxnet import (
    NetworkWeights,
    TrainConfig,
    gradient,
    objective,
    partial_loglik,
    predict_etas,
    train,
)

from conftest import lifetimes
from oracles import finite_difference_gradient, newton_cox_fit

INTERACTION_VARIABLES = ("POB", "TOA", "SEX", "AGE")
SPLIT_SEED = 5
TRAIN_SEED = 2


def check(criterion: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] criterion {criterion}: {status} ({detail})",
          flush=True)
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def interaction_pipeline():
    """interaction-v1 at 8000 train / 4000 test, grid-selected model."""
    config = dg.interaction_v1(n_records=12000)
    records, true_etas = dg.generate(config)
    perm = np.random.default_rng(SPLIT_SEED).permutation(len(records))
    train_idx = np.sort(perm[:8000])
    test_idx = np.sort(perm[8000:])
    train_recs = [records[i] for i in train_idx]
    test_recs = [records[i] for i in test_idx]

    started = time.perf_counter()
    grid = sel.grid_search(
        train_recs, test_recs,
        subsets={"F": INTERACTION_VARIABLES},
        lambdas=(0.5, 1.0, 2.0, 4.0, 6.0),
        hidden_sizes=(0, 2, 4, 8),
        seed=TRAIN_SEED,
    )
    main_effects = sel.main_effects_fit(train_recs, INTERACTION_VARIABLES,
                                        seed=TRAIN_SEED)
    r2_main = sel.score_model(main_effects, test_recs)
    elapsed = time.perf_counter() - started

    best = grid.best
    codebook = encoding.build_codebook(train_recs, min_count=10,
                                       variables=INTERACTION_VARIABLES)
    model = train(train_recs, codebook,
                  TrainConfig(decay=best.decay, n_hidden=best.n_hidden,
                              seed=TRAIN_SEED))
    oracle = dg.oracle_r2(test_recs, true_etas[test_idx])
    test_etas = predict_etas(model, test_recs)
    return {
        "config": config,
        "train": train_recs,
        "test": test_recs,
        "grid": grid,
        "r2_main": r2_main,
        "model": model,
        "oracle": oracle,
        "test_etas": test_etas,
        "grid_seconds": elapsed,
    }


class TestCriterion1Gradient:
    def test_analytic_gradient_matches_central_differences(self):
        started = time.perf_counter()
        worst = 0.0
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            n_inputs = int(rng.integers(2, 11))
            n_hidden = int(rng.integers(0, 4))
            n_records = int(rng.integers(8, 31))
            x = rng.integers(0, 2, (n_records, n_inputs)).astype(float)
            durations = rng.exponential(5.0, n_records) + 0.05
            events = rng.random(n_records) < 0.7
            if not events.any():
                events[0] = True
            weights = NetworkWeights(
                n_inputs, n_hidden,
                rng.normal(0, 0.6, (n_inputs + 1, n_hidden)),
                rng.normal(0, 0.6, n_hidden),
                rng.normal(0, 0.6, n_inputs + 1),
            )
            decay = float(rng.uniform(0, 4))
            bias_decay = decay / 25.0
            analytic = gradient(weights, x, durations, events, decay,
                                bias_decay).pack()

            def fun(flat):
                w = NetworkWeights.unpack(weights.n_inputs, weights.n_hidden,
                                          flat)
                return objective(w, x, durations, events, decay, bias_decay)

            numeric = finite_difference_gradient(fun, weights.pack(),
                                                 step=1e-5)
            rel = np.abs(analytic - numeric) / np.maximum.reduce(
                [np.abs(analytic), np.abs(numeric),
                 np.full_like(analytic, 1e-6)])
            worst = max(worst, float(rel.max()))
        elapsed = time.perf_counter() - started
        check(1, worst < 1e-4 and elapsed < 10.0,
              f"max relative error {worst:.2e} over 20 draws, "
              f"{elapsed:.1f}s")


class TestCriterion2LinearDegeneracy:
    def test_matches_newton_oracle_within_1e3(self):
        started = time.perf_counter()
        records, _ = dg.generate(dg.linear_v1(n_records=200))
        codebook = encoding.build_codebook(records, min_count=10)
        config = TrainConfig(decay=0.0, bias_decay=0.0, n_hidden=0,
                             tolerance=1e-12, gradient_tolerance=1e-7,
                             max_iterations=2000, seed=3)
        model = train(records, codebook, config)

        x = encoding.encode_many(records, codebook)
        durations, events = lifetimes(records)
        keep = []
        seen = set()
        for idx, (var, _) in enumerate(codebook.layout()):
            if not x[:, idx].any():
                continue
            if var not in seen:
                seen.add(var)
            else:
                keep.append(idx)
        beta, _ = newton_cox_fit(x[:, keep], durations, events)

        worst = 0.0
        offset = 0
        for var in codebook.variables:
            cats = codebook.codings[var].categories
            full = np.zeros(len(cats))
            for j in range(len(cats)):
                if offset + j in keep:
                    full[j] = beta[keep.index(offset + j)]
            present = [j for j in range(len(cats))
                       if x[:, offset + j].any()]
            net = model.weights.w_in_out[1:][offset:offset + len(cats)]
            net = net[present]
            ref = full[present]
            worst = max(worst, float(np.max(np.abs(
                (net - net.mean()) - (ref - ref.mean())))))
            offset += len(cats)
        elapsed = time.perf_counter() - started
        check(2, worst < 1e-3 and elapsed < 30.0,
              f"max centered-coefficient gap {worst:.2e}, {elapsed:.1f}s")


class TestCriterion3SurvivalPrimitives:
    def test_hand_computed_examples_exact(self):
        tol = 1e-12
        ok = True
        details = []

        km = sv.kaplan_meier([1, 2, 3], [True, False, True])
        ok &= abs(km.survival[0] - 2 / 3) < tol and abs(km.survival[1]) < tol
        km_tied = sv.kaplan_meier([1, 1, 2], [True, True, True])
        ok &= abs(km_tied.survival[0] - 1 / 3) < tol
        details.append("KM")

        baseline = sv.breslow_baseline([1, 2], [True, True], [0.0, 0.0])
        ok &= np.allclose(baseline.cumulative_hazard, [0.5, 1.5], atol=tol)
        rng = np.random.default_rng(3)
        d = rng.exponential(4.0, 300).round(1) + 0.1
        e = rng.random(300) < 0.7
        na_values = []
        h = 0.0
        for t in np.unique(d[e]):
            h += int(np.sum(e & (d == t))) / int(np.sum(d >= t))
            na_values.append(h)
        b2 = sv.breslow_baseline(d, e, np.zeros(300))
        ok &= np.allclose(b2.cumulative_hazard, na_values, atol=tol)
        details.append("Breslow=Nelson-Aalen at zero scores")

        ok &= abs(partial_loglik([0.0, 0.0], [1, 2], [True, False])
                  - np.log(0.5)) < tol
        ok &= abs(partial_loglik([0.0] * 3, [1, 2, 3], [True] * 3)
                  - (np.log(1 / 3) + np.log(1 / 2))) < tol
        details.append("partial likelihood")

        ok &= sv.generalized_r2(-10.0, -10.0, 5) == 0.0
        ok &= abs(sv.generalized_r2(-5.0, -30.0, 50)
                  - (1 - np.exp(-1))) < tol
        details.append("generalized R2")
        check(3, bool(ok), ", ".join(details) + " all exact at 1e-12")


class TestCriterion4BreslowRecovery:
    def test_exponential_baseline_within_ten_percent(self):
        started = time.perf_counter()
        rng = np.random.default_rng(42)
        durations = rng.exponential(10.0, 2000)  # rate 0.1
        baseline = sv.breslow_baseline(durations, np.ones(2000, bool),
                                       np.zeros(2000))
        lo, hi = np.percentile(durations, [10, 90])
        window = (baseline.times >= lo) & (baseline.times <= hi)
        ratio = baseline.cumulative_hazard[window] / (0.1 *
                                                      baseline.times[window])
        worst = float(np.max(np.abs(ratio - 1)))
        elapsed = time.perf_counter() - started
        check(4, worst < 0.10 and elapsed < 10.0,
              f"max |H0(t)/(0.1 t) - 1| = {worst:.3f} on the 10th-90th "
              f"percentiles, {elapsed:.1f}s")


class TestCriterion5InteractionAdvantage:
    def test_grid_selected_ann_beats_main_effects(self, interaction_pipeline):
        p = interaction_pipeline
        best = p["grid"].best
        gap = best.r2 - p["r2_main"]
        ok = (
            gap >= 0.02
            and best.r2 <= p["oracle"] + 0.02
            and p["r2_main"] <= p["oracle"] + 0.02
            and p["grid_seconds"] < 900.0
        )
        check(5, ok,
              f"ANN R2 {best.r2:.3f} (decay {best.decay}, hidden "
              f"{best.n_hidden}) vs main effects {p['r2_main']:.3f}, gap "
              f"{gap:.3f}, oracle {p['oracle']:.3f}, grid "
              f"{p['grid_seconds']:.0f}s")


class TestCriterion6QuintileCalibration:
    def test_diagonal_dominance(self, interaction_pipeline):
        p = interaction_pipeline
        durations, events = lifetimes(p["test"])
        table = ev.quintile_table(p["test_etas"], durations, events)
        rows_ok = np.allclose(table.sum(axis=1), 1.0, atol=1e-9)
        ok = (
            rows_ok
            and table[0, 0] > 0.30 and table[4, 4] > 0.30
            and table[0, 4] < 0.12 and table[4, 0] < 0.12
        )
        check(6, bool(ok),
              f"diagonal corners {table[0, 0]:.3f}/{table[4, 4]:.3f}, "
              f"off corners {table[0, 4]:.3f}/{table[4, 0]:.3f}, rows sum "
              f"to 1: {rows_ok}")


class TestCriterion7MovingWindow:
    def test_median_calibration_central_eighty_percent(self,
                                                       interaction_pipeline):
        p = interaction_pipeline
        durations, events = lifetimes(p["test"])
        curves = [sv.survival_from_eta(p["model"].baseline, float(x))
                  for x in p["test_etas"]]
        points = ev.moving_window_calibration(curves, durations, events)
        rows = [pt for pt in points if pt.summary == "median"]
        predicted = np.asarray([pt.predicted for pt in rows])
        actual = np.asarray([pt.actual for pt in rows])
        span = predicted.max() - predicted.min()
        central = ((predicted >= predicted.min() + 0.1 * span)
                   & (predicted <= predicted.min() + 0.9 * span))
        rel = np.abs(actual - predicted) / predicted
        worst = float(rel[central].max())
        check(7, worst <= 0.15,
              f"max relative median error {worst:.3f} over the central 80% "
              f"({int(central.sum())} grid points)")


class TestCriterion8PartialInputs:
    def test_group_medians_signs_and_concordance(self, interaction_pipeline):
        p = interaction_pipeline
        model = p["model"]
        train_recs = p["train"]
        index = pi.TrainingIndex.from_model(model)
        durations, events = lifetimes(train_recs)

        pairs = []
        for code in [c.label for c in p["config"].variables["POB"]]:
            for sex_label in ("F", "M"):
                mask = index.match_mask({"POB": code, "SEX": sex_label})
                if int(mask.sum()) < 30:
                    continue
                predicted = pi.predict_method_a(
                    {"POB": code, "SEX": sex_label}, model, index=index)
                predicted_median = sv.curve_quantile(predicted.curve, 0.5)
                km = sv.kaplan_meier(durations[mask], events[mask])
                actual_median = sv.curve_quantile(km, 0.5)
                if predicted_median is not None and actual_median is not None:
                    pairs.append((predicted_median, actual_median))
        predicted, actual = np.asarray(pairs).T
        correlation = float(np.corrcoef(predicted, actual)[0, 1])

        report = ev.sex_difference_concordance(model, train_recs, "POB")
        agreement = report.n_sign_agreements / report.n_codes

        # singleton matches: exact equality of Method A, Method B and the
        # individual prediction, on a draw small enough to have singletons
        small_records, _ = dg.generate(dg.interaction_v1(n_records=300,
                                                         seed=29))
        small_book = encoding.build_codebook(small_records, min_count=10)
        small_model = train(small_records, small_book,
                            TrainConfig(decay=1.0, n_hidden=2, seed=1))
        small_index = pi.TrainingIndex.from_model(small_model)
        singleton_ok = False
        for i, rec in enumerate(small_records):
            mask = small_index.match_mask(dict(rec.covariates))
            if int(mask.sum()) != 1:
                continue
            a = pi.predict_method_a(dict(rec.covariates), small_model,
                                    index=small_index)
            b = pi.predict_method_b(dict(rec.covariates), small_model,
                                    index=small_index)
            individual = sv.survival_from_eta(
                small_model.baseline, float(small_model.train_etas[i]))
            singleton_ok = (
                np.array_equal(a.curve.survival, individual.survival)
                and np.allclose(b.curve.survival, individual.survival,
                                atol=1e-15)
            )
            break
        ok = (
            correlation > 0.9
            and singleton_ok
            and agreement >= 0.70
            and report.kendall_tau > 0
            and report.p_value < 0.01
        )
        check(8, bool(ok),
              f"group-median correlation {correlation:.3f} "
              f"({len(pairs)} groups), singleton A=B=individual: "
              f"{singleton_ok}, sign agreement "
              f"{report.n_sign_agreements}/{report.n_codes}, tau "
              f"{report.kendall_tau:.3f} (p = {report.p_value:.2g})")


class TestCriterion9Trend:
    def test_trend_recovery_and_null_slopes(self):
        config = dg.trend_v1()
        records, _ = dg.generate(config)
        report = ev.fit_time_trend(encoding.modelling_extract(records))
        rate = config.baseline.rate
        worst = 0.0
        for fraction in (0.1, 0.3, 0.5, 0.7, 0.9):
            weeks = fraction * config.open_window_weeks
            truth = 1.0 / (rate * np.exp(config.trend_per_week * weeks))
            nearest = min(report.grid, key=lambda g: abs(g.weeks - weeks))
            worst = max(worst, abs(nearest.mean - truth) / truth)

        last = report.quarters[-1]
        in_quarter = [g for g in report.grid
                      if (g.open_date.year, (g.open_date.month - 1) // 3 + 1)
                      == (last.year, last.quarter)]
        fitted_recent = float(np.mean([g.mean for g in in_quarter]))
        naive_below = (last.censor_rate > 0.2
                       and last.naive_mean < fitted_recent)

        null_records, _ = dg.generate(dg.null_v1())
        null_report = ev.fit_time_trend(
            encoding.modelling_extract(null_records))
        coef = np.asarray(null_report.coefficients)
        se = np.asarray(null_report.standard_errors)
        null_ok = bool(np.all(np.abs(coef) <= 2.0 * se))

        ok = worst < 0.15 and naive_below and null_ok
        check(9, ok,
              f"max relative mean error {worst:.3f}, recent naive mean "
              f"{last.naive_mean:.2f} < fitted {fitted_recent:.2f} at censor "
              f"rate {last.censor_rate:.2f}, null slopes within 2 SE: "
              f"{null_ok}")


class TestCriterion10Determinism:
    def test_bit_identical_models_and_round_trip(self, tmp_path):
        records, _ = dg.generate(dg.linear_v1(n_records=150, seed=2))
        codebook = encoding.build_codebook(records, min_count=10)
        config = TrainConfig(decay=1.0, n_hidden=2, seed=9)
        path_a = tmp_path / "a.json"
        path_b = tmp_path / "b.json"
        model_io.save_model(path_a, train(records, codebook, config))
        model_io.save_model(path_b, train(records, codebook, config))
        identical = path_a.read_bytes() == path_b.read_bytes()

        loaded = model_io.load_model(path_a)
        path_c = tmp_path / "c.json"
        model_io.save_model(path_c, loaded)
        round_trip = path_a.read_bytes() == path_c.read_bytes()
        check(10, identical and round_trip,
              f"same-seed files identical: {identical}, round trip "
              f"bit-exact: {round_trip}")
