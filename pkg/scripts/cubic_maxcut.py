"""Iterative SSR-MCTS approximation ratio on the 19 curated 10-vertex cubic graphs.

    python3 scripts/cubic_maxcut.py --p-max 10 --variant vanilla --out results/cubic_maxcut.csv
"""

import argparse
import csv
import dataclasses

import numpy as np

from qaoa_mcts import MctsConfig, build_diagonal, cubic10_graphs, run_iterative
from qaoa_mcts.analysis import GW_RATIO_CUBIC, approximation_ratio, fmt


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--p-max", type=int, default=10)
    parser.add_argument("--variant", choices=["vanilla", "single_player"], default="vanilla")
    parser.add_argument("--out", default="cubic_maxcut.csv")
    args = parser.parse_args()

    ratios = []
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["graph", "seed", "depth", "energy", "ratio"])
        for k, graph in enumerate(cubic10_graphs()):
            d = build_diagonal(graph)
            config = MctsConfig(seed=k, variant=args.variant)
            row = []
            for r in run_iterative(d, args.p_max, config):
                ratio = approximation_ratio(d, r.energy, graph.num_edges)
                row.append(ratio)
                w.writerow([f"graph_{k:02d}", k, r.depth, fmt(r.energy), fmt(ratio)])
            ratios.append(row)
            print(f"graph_{k:02d} " + " ".join(f"{x:.3f}" for x in row), flush=True)
    mean = np.mean(ratios, axis=0)
    print("mean r  " + " ".join(f"{x:.4f}" for x in mean))
    print(f"GW line {GW_RATIO_CUBIC}")


if __name__ == "__main__":
    main()
