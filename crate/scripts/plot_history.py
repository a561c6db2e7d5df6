#!/usr/bin/env python3
"""Plot relative gradient norms from sympbench history files.

    python3 scripts/plot_history.py out/history/*.csv -o history.png
"""

import argparse
import csv
from pathlib import Path


def read_history(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [int(r["j"]) for r in rows], [float(r["grad_norm_rel"]) for r in rows], [r["phase"] for r in rows]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="+", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("history.png"))
    args = ap.parse_args()

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in args.files:
        j, g, phase = read_history(path)
        if not j:
            continue
        (line,) = ax.semilogy(j, g, label=path.stem)
        switch = next((i for i, p in enumerate(phase) if p == "Newton"), None)
        if switch is not None:
            ax.semilogy([j[switch]], [g[switch]], "o", color=line.get_color())
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative gradient norm")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(args.output)


if __name__ == "__main__":
    main()
