#!/usr/bin/env python3
"""Plot a rates CSV (ratio,bt1_rate,bt2_rate,it_rate) written by `safescreen rates`."""
import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("--out", default="rates.png")
    args = parser.parse_args()

    with open(args.csv, newline="") as f:
        rows = list(csv.DictReader(f))
    ratio = [float(r["ratio"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for key, label, style in [("it_rate", "IT", "-o"), ("bt1_rate", "BT1", "--s"), ("bt2_rate", "BT2", ":^")]:
        ax.plot(ratio, [float(r[key]) for r in rows], style, label=label, markersize=4)
    ax.set_xlabel("C_ref / C")
    ax.set_ylabel("screened non-SVs")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
