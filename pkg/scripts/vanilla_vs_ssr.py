"""Vanilla MCTS, single-player MCTS and iterative SSR-MCTS (both variants) on one
n=7 3-SAT instance, P=1..P_MAX, averaged over seeds.

    python3 scripts/vanilla_vs_ssr.py --seeds 10 --p-max 6 --out results/vanilla_vs_ssr.csv
"""

import argparse
import csv
import dataclasses
from functools import partial

import numpy as np

from qaoa_mcts import MctsConfig, SearchSpace, build_diagonal, evaluate_cost, generate_sat_unique, play_game, run_iterative
from qaoa_mcts.analysis import fmt


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instance-seed", type=int, default=0)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--p-max", type=int, default=6)
    parser.add_argument("--p-max-unrestricted", type=int, default=3,
                        help="unrestricted games get expensive quickly; stop them here")
    parser.add_argument("--out", default="vanilla_vs_ssr.csv")
    args = parser.parse_args()

    d = build_diagonal(generate_sat_unique(7, 3.0, seed=args.instance_seed))
    oracle = partial(evaluate_cost, d)
    rows = []
    for seed in range(args.seeds):
        base = MctsConfig(seed=seed)
        for variant, tag in (("vanilla", ""), ("single_player", "_sp")):
            config = dataclasses.replace(base, variant=variant)
            for r in run_iterative(d, args.p_max, config):
                rows.append(("ssr" + tag, seed, r.depth, r.energy))
            for p in range(1, args.p_max_unrestricted + 1):
                game = play_game(SearchSpace.unrestricted(p, 30), oracle, dataclasses.replace(config, seed=seed * 100 + p))
                rows.append((("sp" if tag else "vanilla"), seed, p, game.energy))
        print(f"seed {seed} done", flush=True)

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["protocol", "seed", "depth", "energy"])
        w.writerows([p, s, depth, fmt(e)] for p, s, depth, e in rows)
    for protocol in ("vanilla", "sp", "ssr", "ssr_sp"):
        by_p = {}
        for p, _, depth, e in rows:
            if p == protocol:
                by_p.setdefault(depth, []).append(e)
        print(protocol, " ".join(f"P{k}={np.mean(v):.3f}" for k, v in sorted(by_p.items())))


if __name__ == "__main__":
    main()
