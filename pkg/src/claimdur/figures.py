"""Figure rendering for the CLI report path.

Each function turns one report's data into a PNG next to the delimited
output.  The report generators themselves stay plot-free; this module is the
only place matplotlib appears.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

WEEK_MARKERS = (1.0, 4.0, 10.0)


def save_curve_figure(path, curve, title: str = "Predicted survival") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    times = np.concatenate([[0.0], curve.times])
    surv = np.concatenate([[1.0], curve.survival])
    ax.step(times, surv, where="post")
    for w in WEEK_MARKERS:
        if w <= times[-1]:
            ax.axvline(w, color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("weeks")
    ax.set_ylabel("S(t)")
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_grid_figure(path, entries) -> None:
    subsets = sorted({e.subset for e in entries})
    fig, axes = plt.subplots(1, len(subsets), figsize=(6 * len(subsets), 4.5),
                             squeeze=False)
    for ax, subset in zip(axes[0], subsets):
        rows = [e for e in entries if e.subset == subset and e.r2 is not None]
        for nh in sorted({e.n_hidden for e in rows}):
            line = sorted((e.decay, e.r2) for e in rows if e.n_hidden == nh)
            ax.plot([p[0] for p in line], [p[1] for p in line],
                    marker="o", label=f"hidden={nh}")
        ax.set_xlabel("decay")
        ax.set_ylabel("generalized R$^2$")
        ax.set_title(f"subset {subset}")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_decile_figure(path, stats) -> None:
    boxes = []
    for s in stats:
        if s.n == 0:
            continue
        boxes.append({
            "label": str(s.group), "whislo": s.minimum, "q1": s.q1,
            "med": s.median, "q3": s.q3, "whishi": s.maximum, "fliers": [],
        })
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bxp(boxes, showfliers=False)
    for w in WEEK_MARKERS:
        ax.axhline(w, color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("predicted-duration decile (1 = shortest)")
    ax.set_ylabel("closed-claim duration (weeks)")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_quintile_figure(path, matrix: np.ndarray) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.8))
    im = ax.imshow(matrix, cmap="Blues", vmin=0, vmax=max(0.5, matrix.max()))
    for i in range(5):
        for j in range(5):
            ax.text(j, i, f"{matrix[i, j]:.2f}", ha="center", va="center",
                    fontsize=9)
    ax.set_xticks(range(5), [str(i + 1) for i in range(5)])
    ax.set_yticks(range(5), [str(i + 1) for i in range(5)])
    ax.set_xlabel("actual duration quintile")
    ax.set_ylabel("predicted quintile")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_window_figure(path, points) -> None:
    names = ("mean", "q1", "median", "q3")
    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    for ax, name in zip(axes.ravel(), names):
        rows = [p for p in points if p.summary == name]
        if rows:
            x = [p.predicted for p in rows]
            y = [p.actual for p in rows]
            ax.plot(x, y, "o", markersize=3)
            lim = max(max(x), max(y)) * 1.05
            ax.plot([0, lim], [0, lim], color="gray", linewidth=0.8)
        ax.set_title(name)
        ax.set_xlabel("predicted (weeks)")
        ax.set_ylabel("actual (weeks)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_ph_figure(path, curves, variable: str) -> None:
    fig, ax = plt.subplots(figsize=(7.5, 5))
    for c in curves:
        ax.step(c.times, c.log_cumulative_hazard, where="post",
                label=f"{c.category} (n={c.n})")
    ax.set_xscale("log")
    ax.set_xlabel("weeks")
    ax.set_ylabel("log cumulative hazard")
    ax.set_title(f"partitioned by {variable}")
    if len(curves) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sexdiff_figure(path, report) -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    x = [r.actual_difference for r in report.rows]
    y = [r.predicted_difference for r in report.rows]
    ax.plot(x, y, "o")
    ax.axhline(0, color="gray", linewidth=0.8)
    ax.axvline(0, color="gray", linewidth=0.8)
    a, b = report.groups
    ax.set_xlabel(f"actual median difference ({b} - {a}, weeks)")
    ax.set_ylabel(f"predicted median difference ({b} - {a}, weeks)")
    ax.set_title(
        f"{report.n_sign_agreements}/{report.n_codes} sign agreements, "
        f"tau={report.kendall_tau:.2f} (p={report.p_value:.2g})"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_stepwise_figure(path, steps) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    names = [s.variable for s in steps]
    values = [s.lr_chi2 for s in steps]
    bars = ax.bar(names, values)
    for bar, step in zip(bars, steps):
        if step.p_value > 0.05:
            bar.set_color("#bbbbbb")
    ax.set_ylabel("likelihood-ratio chi-square")
    ax.set_xlabel("predictor added (left to right)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trend_figure(path, report) -> None:
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    weeks = [g.weeks for g in report.grid]
    q_mid = []
    for q in report.quarters:
        starts = [g.weeks for g in report.grid
                  if (g.open_date.year, (g.open_date.month - 1) // 3 + 1)
                  == (q.year, q.quarter)]
        q_mid.append(float(np.mean(starts)) if starts else np.nan)

    axes[0].plot(weeks, [g.mean for g in report.grid], label="fitted")
    axes[0].plot(q_mid, [q.naive_mean for q in report.quarters], "o--",
                 label="quarterly, censoring ignored")
    axes[0].set_ylabel("mean (weeks)")
    axes[0].legend(fontsize=8)

    medians = [(g.weeks, g.median) for g in report.grid if g.median is not None]
    axes[1].plot([m[0] for m in medians], [m[1] for m in medians], label="fitted")
    axes[1].plot(q_mid, [q.naive_median for q in report.quarters], "o--",
                 label="quarterly, censoring ignored")
    axes[1].set_ylabel("median (weeks)")
    axes[1].legend(fontsize=8)

    axes[2].plot(q_mid, [q.censor_rate for q in report.quarters], "o-")
    axes[2].set_ylabel("censor rate")
    axes[2].set_xlabel(f"weeks since {report.origin.isoformat()}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
