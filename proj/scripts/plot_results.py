#!/usr/bin/env python3
"""Render a static figure from an experiment CSV.

The experiment kind is inferred from the header row, so the only required
argument is the CSV path:

    python3 scripts/plot_results.py coordcheck_spectral.csv
    python3 scripts/plot_results.py transfer_scg.csv -o transfer.png
"""

import argparse
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_train(df, ax_loss, ax_norm):
    ax_loss.plot(df["step"], df["loss"], color="tab:blue")
    ax_loss.set_xlabel("step")
    ax_loss.set_ylabel("training loss")
    ax_loss.set_yscale("log")
    for col in df.columns:
        if col.startswith("norm_"):
            ax_norm.plot(df["step"], df[col], label=col.removeprefix("norm_"))
    ax_norm.set_xlabel("step")
    ax_norm.set_ylabel("weight norm (layer geometry)")
    ax_norm.legend(fontsize=8)


def plot_coordcheck(df, ax):
    final = df[df["step"] == df["step"].max()]
    for layer, group in final.groupby("layer"):
        group = group.sort_values("width")
        ax.plot(group["width"], group["delta_rms"], marker="o", label=f"layer {layer}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("width")
    ax.set_ylabel("preactivation drift (rms)")
    ax.legend(fontsize=8)
    ax.set_title("flat lines = width-robust update scale")


def plot_transfer(df, ax):
    for width, group in df.groupby("width"):
        group = group.sort_values("lr")
        finite = group[group["final_loss"] < math.inf]
        ax.plot(finite["lr"], finite["final_loss"], marker="o", label=f"width {width}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("stepsize")
    ax.set_ylabel("final loss")
    ax.legend(fontsize=8)
    ax.set_title("aligned minima = stepsize transfer")


def plot_lmo_bench(df, ax_iters, ax_time):
    ax_iters.plot(df["size"], df["iters"], marker="o", color="tab:green")
    ax_iters.set_xlabel("matrix size")
    ax_iters.set_ylabel("newton-schulz iterations to 1e-3")
    ax_time.plot(df["size"], df["ns_time_ms"], marker="o", label="newton-schulz")
    ax_time.plot(df["size"], df["svd_time_ms"], marker="o", label="svd")
    ax_time.set_xscale("log", base=2)
    ax_time.set_yscale("log")
    ax_time.set_xlabel("matrix size")
    ax_time.set_ylabel("wall time (ms)")
    ax_time.legend(fontsize=8)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", help="experiment output file")
    parser.add_argument("-o", "--out", help="figure path (default: csv path with .png)")
    args = parser.parse_args()

    df = pd.read_csv(args.csv)
    columns = set(df.columns)
    out = args.out or args.csv.rsplit(".", 1)[0] + ".png"

    if {"step", "loss", "sched"} <= columns:
        fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
        plot_train(df, a, b)
    elif {"width", "delta_rms"} <= columns:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        plot_coordcheck(df, ax)
    elif {"width", "lr", "final_loss"} <= columns:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        plot_transfer(df, ax)
    elif {"size", "iters"} <= columns:
        fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
        plot_lmo_bench(df, a, b)
    else:
        raise SystemExit(f"unrecognized header: {sorted(columns)}")

    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    main()
