"""Basin-rollout MCTS and MCTS-then-descend against iterative SSR-MCTS on n=7 3-SAT.

    python3 scripts/hybrid_parity.py --instances 5 --p-max 4 --cycles 100
"""

import argparse
import dataclasses

import numpy as np

from qaoa_mcts import MctsConfig, SearchSpace, build_diagonal, generate_sat_unique, run_iterative
from qaoa_mcts.hybrid import LocalMinimizerConfig, basin_rollout_game, mcts_then_descend
from qaoa_mcts.ssr import derive_seed


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instances", type=int, default=5)
    parser.add_argument("--p-max", type=int, default=4)
    parser.add_argument("--cycles", type=int, default=100, help="basin-rollout cycles per turn")
    parser.add_argument("--repeats", type=int, default=3, help="games per MCTS-then-descend run")
    args = parser.parse_args()

    minimizer = LocalMinimizerConfig(gradient="adjoint")
    table = {"ssr": [], "basin": [], "descend": []}
    for k in range(args.instances):
        d = build_diagonal(generate_sat_unique(7, 3.0, seed=k))
        table["ssr"].append([r.energy for r in run_iterative(d, args.p_max, MctsConfig(seed=k))])
        basin, descend = [], []
        for p in range(1, args.p_max + 1):
            seed = derive_seed(k, p)
            cfg = MctsConfig(cycles_initial=0, cycles_per_turn=args.cycles, seed=seed)
            basin.append(basin_rollout_game(d, SearchSpace.unrestricted(p, 30), cfg, minimizer).energy)
            descend.append(mcts_then_descend(d, p, MctsConfig(seed=seed), minimizer, args.repeats).energy)
        table["basin"].append(basin)
        table["descend"].append(descend)
        print(f"instance {k} done", flush=True)
    for name, values in table.items():
        print(f"{name:8s} " + " ".join(f"{e:.3f}" for e in np.mean(values, axis=0)))


if __name__ == "__main__":
    main()
