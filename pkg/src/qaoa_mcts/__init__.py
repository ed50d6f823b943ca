"""Monte Carlo Tree Search with iterative search-space restriction for QAOA schedules."""

from .mcts import GameResult, MctsConfig, SearchSpace, play_game
from .problems import (DiagonalCost, MaxCutGraph, SatInstance, build_diagonal, cubic10_graphs,
                       generate_regular_graph, generate_sat_unique, load_instance)
from .qaoa import Schedule, evaluate_cost
from .ssr import RestrictionEdges, SofteningSchedule, restrict, run_iterative

__version__ = "0.1.0"

__all__ = [
    "DiagonalCost", "GameResult", "MaxCutGraph", "MctsConfig", "RestrictionEdges", "SatInstance",
    "Schedule", "SearchSpace", "SofteningSchedule", "build_diagonal", "cubic10_graphs",
    "evaluate_cost", "generate_regular_graph", "generate_sat_unique", "load_instance",
    "play_game", "restrict", "run_iterative",
]
