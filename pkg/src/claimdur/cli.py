"""Command-line driver: data generation, training, selection, reports, serving.

Report commands write delimited text to --out and render a matching PNG
figure next to it (suppress with --no-figures).  Every command accepts
--seed and --config FILE, where FILE holds JSON option overrides for the
command (explicit flags still win).
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import datagen, evaluation, figures, model_io, selection
from .coxnet import TrainConfig, predict_etas, train as train_network
from .encoding import (
    ClaimsFileError,
    CodebookError,
    build_codebook,
    modelling_extract,
    read_claims,
    save_codebook,
    write_claims,
)
from .partial_inputs import (
    EmptyMatchError,
    TrainingIndex,
    predict_method_a,
    predict_method_b,
    predict_relaxing,
    prediction_payload,
)
from .survival import survival_from_eta


def _config_option(f):
    def callback(ctx, param, value):
        if value:
            with open(value) as fh:
                overrides = json.load(fh)
            if not isinstance(overrides, dict):
                raise click.BadParameter("config file must hold a JSON object")
            ctx.default_map = {**overrides, **(ctx.default_map or {})}
        return value

    return click.option(
        "--config", type=click.Path(exists=True, dir_okay=False),
        callback=callback, is_eager=True, expose_value=False,
        help="JSON file with option overrides for this command.",
    )(f)


def _seed_option(f):
    return click.option("--seed", type=int, default=0, show_default=True,
                        help="Random seed.")(f)


def _figures_option(f):
    return click.option("--figures/--no-figures", "render_figures", default=True,
                        show_default=True,
                        help="Render a PNG next to the delimited output.")(f)


def _load_records(path, extract: bool = True):
    try:
        records = read_claims(path)
    except ClaimsFileError as err:
        raise click.ClickException(str(err)) from err
    return modelling_extract(records) if extract else records


def _figure_path(out: str) -> Path:
    return Path(out).with_suffix(".png")


def _write_report_doc(out: str, payload: dict) -> Path:
    """Structured sibling of a delimited report (same stem, .json)."""
    path = Path(out).with_suffix(".json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


@click.group()
def main():
    """Claim-duration prediction: survival-model training and serving."""


@main.command("gen-data")
@click.option("--preset", type=click.Choice(sorted(datagen.PRESETS)),
              default="linear-v1", show_default=True)
@click.option("--n", "n_records", type=int, default=None,
              help="Override the preset's record count.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--oracle-out", type=click.Path(dir_okay=False),
              help="Also write the true risk scores (record index -> eta*).")
@_seed_option
@_config_option
def gen_data(preset, n_records, out, oracle_out, seed):
    """Generate synthetic claims with a known ground truth."""
    config = datagen.preset(preset, n_records=n_records, seed=seed)
    records, etas = datagen.generate(config)
    write_claims(out, records)
    if oracle_out:
        datagen.write_oracle(oracle_out, etas)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--min-count", type=int, default=10, show_default=True)
@click.option("--variables", default=None,
              help="Comma-separated variable subset (default: all present).")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_seed_option
@_config_option
def codebook(data, min_count, variables, out, seed):
    """Build and save the consolidation codebook from a claims file."""
    records = _load_records(data)
    try:
        book = build_codebook(
            records, min_count=min_count,
            variables=variables.split(",") if variables else None,
        )
    except CodebookError as err:
        raise click.ClickException(str(err)) from err
    save_codebook(out, book)
    click.echo(f"codebook over {len(book.variables)} variables, "
               f"{book.n_inputs} input nodes -> {out}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--nh", type=int, default=0, show_default=True,
              help="Hidden nodes.")
@click.option("--lambda", "decay", type=float, default=0.0, show_default=True,
              help="Weight decay.")
@click.option("--lambda-b", "bias_decay", type=float, default=None,
              help="Bias decay (default: lambda / 25).")
@click.option("--variables", default=None,
              help="Comma-separated variable subset (default: all present).")
@click.option("--min-count", type=int, default=10, show_default=True)
@click.option("--max-iterations", type=int, default=500, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_seed_option
@_config_option
def train(data, nh, decay, bias_decay, variables, min_count, max_iterations,
          out, seed):
    """Train a model and save it as a versioned document."""
    records = _load_records(data)
    try:
        book = build_codebook(
            records, min_count=min_count,
            variables=variables.split(",") if variables else None,
        )
        config = TrainConfig(decay=decay, bias_decay=bias_decay, n_hidden=nh,
                             max_iterations=max_iterations, seed=seed)
        model = train_network(records, book, config)
    except (CodebookError, ValueError) as err:
        raise click.ClickException(str(err)) from err
    model_io.save_model(out, model)
    click.echo(
        f"trained on {len(records)} records: objective "
        f"{model.final_objective:.4f}, log partial likelihood "
        f"{model.train_loglik:.4f}, stopped by {model.stopped_by} "
        f"after {model.iterations} iterations -> {out}"
    )


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n-train", type=int, required=True)
@click.option("--lambdas", default=",".join(str(x) for x in selection.DEFAULT_LAMBDAS),
              show_default=True)
@click.option("--hidden", default=",".join(str(x) for x in selection.DEFAULT_HIDDEN_SIZES),
              show_default=True)
@click.option("--subsets", default="R,F", show_default=True,
              help='Named subsets to explore ("R", "F").')
@click.option("--min-count", type=int, default=10, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def grid(data, n_train, lambdas, hidden, subsets, min_count, out, render_figures, seed):
    """Grid search over decay, hidden size and variable subset."""
    records = _load_records(data)
    train_recs, test_recs = selection.split(records, n_train, seed=seed)
    chosen = {}
    for name in subsets.split(","):
        name = name.strip()
        if name not in selection.DEFAULT_SUBSETS:
            raise click.ClickException(f"unknown subset {name!r} (have R, F)")
        variables = [v for v in selection.DEFAULT_SUBSETS[name]
                     if any(v in r.covariates for r in train_recs)]
        chosen[name] = tuple(variables)
    result = selection.grid_search(
        train_recs, test_recs, subsets=chosen,
        lambdas=[float(x) for x in lambdas.split(",")],
        hidden_sizes=[int(x) for x in hidden.split(",")],
        seed=seed, min_count=min_count,
    )
    selection.write_grid(out, result)
    _write_report_doc(out, {
        "report": "grid",
        "entries": [{
            "subset": x.subset, "lambda": x.decay, "n_hidden": x.n_hidden,
            "r2": x.r2, "iterations": x.iterations, "seconds": x.seconds,
            "objective": x.objective, "error": x.error,
        } for x in result.entries],
        "best": None if result.best is None else {
            "subset": result.best.subset, "lambda": result.best.decay,
            "n_hidden": result.best.n_hidden, "r2": result.best.r2,
        },
    })
    if render_figures:
        figures.save_grid_figure(_figure_path(out), result.entries)
    if result.best is not None:
        b = result.best
        click.echo(f"best: subset {b.subset}, lambda {b.decay}, "
                   f"hidden {b.n_hidden}, R2 {b.r2:.4f} -> {out}")
    else:
        click.echo("no configuration succeeded", err=True)
        sys.exit(1)


def _model_and_data(model_path, data_path):
    model = model_io.load_model(model_path)
    records = _load_records(data_path)
    etas = predict_etas(model, records)
    d = np.asarray([r.duration_weeks for r in records], dtype=float)
    e = np.asarray([r.event for r in records], dtype=bool)
    return model, records, etas, d, e


@main.group()
def evaluate():
    """Model-quality reports; each writes delimited text plus a figure."""


@evaluate.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def deciles(model_path, data, out, render_figures, seed):
    """Closed-claim duration boxplot stats per predicted-duration decile."""
    _, _, etas, d, e = _model_and_data(model_path, data)
    stats = evaluation.decile_summary(etas, d, e)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["decile", "n", "min", "q1", "median", "q3", "max"])
        for s in stats:
            writer.writerow([s.group, s.n] + [
                "" if v is None else repr(v)
                for v in (s.minimum, s.q1, s.median, s.q3, s.maximum)])
    _write_report_doc(out, {
        "report": "deciles",
        "groups": [{
            "decile": x.group, "n": x.n, "min": x.minimum, "q1": x.q1,
            "median": x.median, "q3": x.q3, "max": x.maximum,
        } for x in stats],
    })
    if render_figures:
        figures.save_decile_figure(_figure_path(out), stats)
    click.echo(f"decile summary -> {out}")


@evaluate.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def quintiles(model_path, data, out, render_figures, seed):
    """Row-stochastic predicted-vs-actual duration quintile matrix."""
    _, _, etas, d, e = _model_and_data(model_path, data)
    matrix = evaluation.quintile_table(etas, d, e)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["predicted_quintile"] +
                        [f"actual_q{j + 1}" for j in range(5)])
        for i in range(5):
            writer.writerow([i + 1] + [repr(float(x)) for x in matrix[i]])
    _write_report_doc(out, {
        "report": "quintiles",
        "matrix": [[float(x) for x in row] for row in matrix],
    })
    if render_figures:
        figures.save_quintile_figure(_figure_path(out), matrix)
    for i in range(5):
        click.echo("  ".join(f"{x:.3f}" for x in matrix[i]))


@evaluate.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--window", type=float, default=1.0, show_default=True)
@click.option("--grid-step", type=float, default=0.5, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def window(model_path, data, window, grid_step, out, render_figures, seed):
    """Moving-window calibration of predicted means and quartiles."""
    model, _, etas, d, e = _model_and_data(model_path, data)
    curves = [survival_from_eta(model.baseline, float(x)) for x in etas]
    points = evaluation.moving_window_calibration(
        curves, d, e, window=window, grid_step=grid_step)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["summary", "predicted", "actual", "n"])
        for p in points:
            writer.writerow([p.summary, repr(p.predicted), repr(p.actual), p.n])
    _write_report_doc(out, {
        "report": "window",
        "window_weeks": window,
        "grid_step_weeks": grid_step,
        "points": [{
            "summary": x.summary, "predicted": x.predicted,
            "actual": x.actual, "n": x.n,
        } for x in points],
    })
    if render_figures:
        figures.save_window_figure(_figure_path(out), points)
    click.echo(f"{len(points)} calibration points -> {out}")


@evaluate.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--code-var", default="NOI", show_default=True)
@click.option("--group-var", default="SEX", show_default=True)
@click.option("--min-per-group", type=int, default=10, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def interactions(model_path, data, code_var, group_var, min_per_group, alpha,
                 out, render_figures, seed):
    """Log-rank scan for code-by-group duration differences."""
    model, records, _, _, _ = _model_and_data(model_path, data)
    report = evaluation.interaction_analysis(
        records, model.codebook, code_var, group_var,
        min_per_group=min_per_group, alpha=alpha)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["code", "favored_group", "p_value"])
        for row in report.rows:
            writer.writerow([row.code, row.favored_group, repr(row.p_value)])
    _write_report_doc(out, {
        "report": "interactions",
        "code_variable": report.code_variable,
        "group_variable": report.group_variable,
        "groups": list(report.groups),
        "n_codes_total": report.n_codes_total,
        "n_codes_qualifying": report.n_codes_qualifying,
        "rows": [{
            "code": x.code, "favored_group": x.favored_group,
            "p_value": x.p_value,
        } for x in report.rows],
    })
    click.echo(
        f"{len(report.rows)} significant of {report.n_codes_qualifying} "
        f"qualifying codes ({report.n_codes_total} total) -> {out}"
    )


@evaluate.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--code-var", default="POB", show_default=True)
@click.option("--min-per-group", type=int, default=10, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def sexdiff(model_path, data, code_var, min_per_group, out, render_figures, seed):
    """Actual vs predicted between-sex median differences per code."""
    model, records, _, _, _ = _model_and_data(model_path, data)
    report = evaluation.sex_difference_concordance(
        model, records, code_var, min_per_group=min_per_group)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["code", "actual_difference", "predicted_difference"])
        for row in report.rows:
            writer.writerow([row.code, repr(row.actual_difference),
                             repr(row.predicted_difference)])
    _write_report_doc(out, {
        "report": "sexdiff",
        "code_variable": report.code_variable,
        "groups": list(report.groups),
        "n_codes": report.n_codes,
        "n_sign_agreements": report.n_sign_agreements,
        "kendall_tau": report.kendall_tau,
        "p_value": report.p_value,
        "rows": [{
            "code": x.code, "actual_difference": x.actual_difference,
            "predicted_difference": x.predicted_difference,
        } for x in report.rows],
    })
    if render_figures:
        figures.save_sexdiff_figure(_figure_path(out), report)
    click.echo(
        f"{report.n_sign_agreements}/{report.n_codes} sign agreements, "
        f"Kendall tau {report.kendall_tau:.3f} (p = {report.p_value:.2g}) -> {out}"
    )


@evaluate.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--variables", default=None,
              help="Comma-separated order of addition (default: all present).")
@click.option("--min-count", type=int, default=10, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def stepwise(data, variables, min_count, out, render_figures, seed):
    """Likelihood-ratio chi-squares from adding predictors successively."""
    records = _load_records(data)
    steps = selection.stepwise_lr_report(
        records, variables=variables.split(",") if variables else None,
        min_count=min_count, seed=seed)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "variable", "df", "loglik", "lr_chi2",
                         "p_value"])
        for i, s in enumerate(steps, start=1):
            writer.writerow([i, s.variable, s.df, repr(s.loglik),
                             repr(s.lr_chi2), repr(s.p_value)])
    _write_report_doc(out, {
        "report": "stepwise",
        "steps": [{
            "variable": x.variable, "df": x.df, "loglik": x.loglik,
            "lr_chi2": x.lr_chi2, "p_value": x.p_value,
        } for x in steps],
    })
    if render_figures:
        figures.save_stepwise_figure(_figure_path(out), steps)
    significant = sum(1 for s in steps if s.p_value <= 0.05)
    click.echo(f"{significant}/{len(steps)} additions significant at 0.05 "
               f"-> {out}")


@evaluate.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--variable", required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def ph(model_path, data, variable, out, render_figures, seed):
    """Per-category log cumulative hazard curves (parallel-curve check)."""
    model, records, _, _, _ = _model_and_data(model_path, data)
    curves = evaluation.ph_diagnostic(records, model.codebook, variable)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "time", "log_cumulative_hazard"])
        for c in curves:
            for t, v in zip(c.times, c.log_cumulative_hazard):
                writer.writerow([c.category, repr(float(t)), repr(float(v))])
    _write_report_doc(out, {
        "report": "ph",
        "variable": variable,
        "curves": [{
            "category": c.category, "n": c.n,
            "times": [float(t) for t in c.times],
            "log_cumulative_hazard": [float(v)
                                      for v in c.log_cumulative_hazard],
        } for c in curves],
    })
    if render_figures:
        figures.save_ph_figure(_figure_path(out), curves, variable)
    click.echo(f"{len(curves)} categories -> {out}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_figures_option
@_seed_option
@_config_option
def trend(data, out, render_figures, seed):
    """Censoring-aware duration trend over open date, plus naive summaries."""
    records = _load_records(data)
    report = evaluation.fit_time_trend(records)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["open_date", "weeks", "eta", "mean", "median"])
        for g in report.grid:
            writer.writerow([
                g.open_date.isoformat(), repr(g.weeks), repr(g.eta),
                repr(g.mean), "" if g.median is None else repr(g.median)])
    quarters_path = Path(out).with_name(Path(out).stem + "-quarters" +
                                        Path(out).suffix)
    with open(quarters_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "quarter", "n", "censor_rate", "naive_mean",
                         "naive_median"])
        for q in report.quarters:
            writer.writerow([q.year, q.quarter, q.n, repr(q.censor_rate),
                             repr(q.naive_mean), repr(q.naive_median)])
    _write_report_doc(out, {
        "report": "trend",
        "origin": report.origin.isoformat(),
        "knot_weeks": list(report.knot_weeks),
        "coefficients": list(report.coefficients),
        "standard_errors": list(report.standard_errors),
        "grid": [{
            "open_date": g.open_date.isoformat(), "weeks": g.weeks,
            "eta": g.eta, "mean": g.mean, "median": g.median,
        } for g in report.grid],
        "quarters": [{
            "year": q.year, "quarter": q.quarter, "n": q.n,
            "censor_rate": q.censor_rate, "naive_mean": q.naive_mean,
            "naive_median": q.naive_median,
        } for q in report.quarters],
    })
    if render_figures:
        figures.save_trend_figure(_figure_path(out), report)
    click.echo(f"trend grid -> {out}; quarterly summaries -> {quarters_path}")


@main.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--set", "assignments", multiple=True, metavar="VAR=VALUE",
              help="Specify one input variable; repeatable.")
@click.option("--method", type=click.Choice(["A", "B"]), default="A",
              show_default=True)
@click.option("--relax", is_flag=True,
              help="Drop blocking constraints when nothing matches.")
@click.option("--out", type=click.Path(dir_okay=False),
              help="Write the survival curve as two-column delimited text.")
@_seed_option
@_config_option
def predict(model_path, assignments, method, relax, out, seed):
    """Predict a duration distribution from a full or partial input."""
    model = model_io.load_model(model_path)
    inputs = {}
    for item in assignments:
        if "=" not in item:
            raise click.ClickException(f"--set expects VAR=VALUE, got {item!r}")
        var, value = item.split("=", 1)
        inputs[var.strip().upper()] = value.strip()
    index = TrainingIndex.from_model(model)
    try:
        if relax:
            result = predict_relaxing(inputs, model, method=method, index=index)
        elif method == "A":
            result = predict_method_a(inputs, model, index=index)
        else:
            result = predict_method_b(inputs, model, index=index)
    except EmptyMatchError as err:
        raise click.ClickException(str(err)) from err
    except ValueError as err:
        raise click.ClickException(str(err)) from err
    payload = prediction_payload(result)
    for key in ("mean", "median", "q1", "q3"):
        value = payload[key]
        shown = "beyond observed range" if value is None else f"{value:.4f}"
        click.echo(f"{key}: {shown}")
    if payload["mean_truncated"]:
        click.echo("note: mean excludes survival mass beyond the last event time")
    click.echo(f"match_count: {payload['match_count']}")
    if payload["eta"] is not None:
        click.echo(f"eta: {payload['eta']:.6f}")
    if payload["dropped"]:
        click.echo(f"dropped constraints: {', '.join(payload['dropped'])}")
    if out:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "survival"])
            for t, s in zip(payload["curve"]["times"],
                            payload["curve"]["survival"]):
                writer.writerow([repr(t), repr(s)])
        click.echo(f"curve -> {out}")


@main.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              envvar="CLAIMDUR_MODEL")
@click.option("--host", default="127.0.0.1", show_default=True,
              envvar="CLAIMDUR_HOST")
@click.option("--port", type=int, default=8000, show_default=True,
              envvar="CLAIMDUR_PORT")
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None,
              help="Static single-page client served under /ui.")
@_seed_option
@_config_option
def serve(model_path, host, port, ui_dir, seed):
    """Serve predictions over HTTP (GET /health, GET /schema, POST /predict)."""
    import uvicorn

    from .service import create_app

    app = create_app(model_path, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
