#!/usr/bin/env python3
"""Draw log-log figures from the CSVs that run_all.py leaves behind.

Looks for the experiment CSVs in the results directory and writes one PNG
per curve-shaped experiment into results/figures/.  Experiments whose CSV
is missing are skipped, so this can run on a partial collection.

    python scripts/plot_results.py [--results results]
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd


def _load(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def _loglog(ax, x, y, **kwargs):
    keep = (x > 0) & (y > 0) & y.notna()
    ax.loglog(x[keep], y[keep], **kwargs)


def plot_trace(path: Path, title: str):
    df = _load(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for col, label in (("gap_plain", "last iterate"),
                       ("gap_avg", "running average"),
                       ("gap_extrap", "extrapolated")):
        if col in df and df[col].notna().any():
            _loglog(ax, df["k"], df[col], label=label, marker=".", lw=1)
    ax.set_xlabel("iterations k")
    ax.set_ylabel("objective gap")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return fig


def plot_fw(path: Path, title: str):
    df = _load(path)
    rules = df["rule"].unique()
    fig, axes = plt.subplots(1, len(rules), figsize=(6 * len(rules), 4.5),
                             squeeze=False)
    for ax, rule in zip(axes[0], rules):
        sub = df[df["rule"] == rule]
        _loglog(ax, sub["k"], sub["gap_plain"], label="last iterate",
                marker=".", lw=1)
        _loglog(ax, sub["k"], sub["gap_extrap"], label="extrapolated",
                marker=".", lw=1)
        ax.set_xlabel("iterations k")
        ax.set_ylabel("objective gap")
        ax.set_title(f"{title}, step rule {rule}")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    return fig


def plot_bias_curve(path: Path, title: str):
    df = _load(path)
    penalties = df["penalty"].unique()
    fig, axes = plt.subplots(1, len(penalties),
                             figsize=(6 * len(penalties), 4.5),
                             squeeze=False)
    for ax, penalty in zip(axes[0], penalties):
        sub = df[df["penalty"] == penalty]
        for m in sorted(sub["m"].unique()):
            per = sub[sub["m"] == m]
            _loglog(ax, per["lambda"], per["gap"], label=f"m = {m}",
                    marker=".", lw=1)
        ax.set_xlabel("smoothing level lambda")
        ax.set_ylabel("objective gap at the smoothed optimum")
        ax.set_title(f"{title}, {penalty} penalty")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    return fig


def plot_oracle_curve(path: Path, title: str):
    df = _load(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for m in sorted(df["m"].unique()):
        per = df[df["m"] == m]
        _loglog(ax, per["iterations"], per["best_gap"], label=f"m = {m}",
                marker=".", lw=1)
    ax.set_xlabel("total gradient evaluations")
    ax.set_ylabel("best reachable gap")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return fig


def plot_ridge(path: Path, title: str):
    df = _load(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for m in sorted(df["m"].unique()):
        per = df[df["m"] == m]
        _loglog(ax, per["lambda"], per["total"], label=f"m = {m}",
                marker=".", lw=1)
    ax.set_xlabel("ridge parameter lambda")
    ax.set_ylabel("mean prediction error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return fig


PLOTTERS = {
    "avg-gd": (plot_trace, "averaged gradient descent"),
    "acc-gd": (plot_trace, "accelerated gradient descent"),
    "fw-lasso": (plot_fw, "Frank-Wolfe, ell_1 ball"),
    "fw-robust": (plot_fw, "Frank-Wolfe, box dual"),
    "smoothing-bias": (plot_bias_curve, "smoothing bias"),
    "smoothing-oracle": (plot_oracle_curve, "smoothing oracle trade-off"),
    "ridge-experiment": (plot_ridge, "ridge, extrapolated smoothers"),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="plot collected CSVs")
    parser.add_argument("--results", default="results")
    args = parser.parse_args(argv)

    results = Path(args.results)
    figdir = results / "figures"
    figdir.mkdir(parents=True, exist_ok=True)

    drawn = 0
    for name, (plotter, title) in PLOTTERS.items():
        path = results / f"{name}.csv"
        if not path.exists():
            continue
        fig = plotter(path, title)
        out = figdir / f"{name}.png"
        fig.savefig(out, dpi=150, bbox_inches="tight")
        plt.close(fig)
        print(f"wrote {out}")
        drawn += 1
    if drawn == 0:
        print(f"no experiment CSVs under {results}/; run scripts/run_all.py "
              f"first", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
