"""How the final SSR-MCTS energy depends on the cycle budget.

Scales both the initial and the per-turn cycle counts by each factor given.

    python3 scripts/budget_study.py --factors 0.25 0.5 1 2 --instances 5 --p-max 4
"""

import argparse
import dataclasses

import numpy as np

from qaoa_mcts import MctsConfig, build_diagonal, generate_sat_unique, run_iterative


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--factors", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    parser.add_argument("--instances", type=int, default=5)
    parser.add_argument("--p-max", type=int, default=4)
    parser.add_argument("--variant", choices=["vanilla", "single_player"], default="vanilla")
    args = parser.parse_args()

    diagonals = [build_diagonal(generate_sat_unique(7, 3.0, seed=k)) for k in range(args.instances)]
    base = MctsConfig(variant=args.variant)
    for f in args.factors:
        config = dataclasses.replace(base, cycles_initial=max(30, int(base.cycles_initial * f)),
                                     cycles_per_turn=max(30, int(base.cycles_per_turn * f)))
        finals = [run_iterative(d, args.p_max, dataclasses.replace(config, seed=k))
                  for k, d in enumerate(diagonals)]
        means = [np.mean([ladder[p].energy for ladder in finals]) for p in range(args.p_max)]
        print(f"x{f:<5} " + " ".join(f"P{p + 1}={m:.3f}" for p, m in enumerate(means)), flush=True)


if __name__ == "__main__":
    main()
