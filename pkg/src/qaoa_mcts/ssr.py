"""Iterative search-space restriction: grow the depth one layer at a time,
searching the new angles between consecutive optima of the previous depth."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from .mcts import GameResult, MctsConfig, SearchSpace, play_game
from .problems import DiagonalCost, build_diagonal
from .qaoa import Schedule, evaluate_cost

TWO_PI = 2 * math.pi

DEFAULT_DELTAS = (0.0, 0.0, 0.1, 0.05, 0.04, 0.03, 0.02, 0.01, 0.01)


def derive_seed(*keys: Optional[int]) -> Optional[int]:
    """Deterministic 32-bit seed from a tuple of non-negative integer keys."""
    if keys and keys[0] is None:
        return None
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True)
class SofteningSchedule:
    """Softening constant per depth: ``deltas[P-1]`` applies at depth ``P``.

    Depths past the end of the list reuse the last value.
    """

    deltas: tuple[float, ...] = DEFAULT_DELTAS

    def __post_init__(self):
        if not self.deltas:
            raise ValueError("softening schedule needs at least one value")
        if any(d < 0 for d in self.deltas):
            raise ValueError("softening constants must be non-negative")
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))

    def delta(self, depth: int) -> float:
        if depth < 1:
            raise ValueError("depth starts at 1")
        return self.deltas[min(depth, len(self.deltas)) - 1]


@dataclass(frozen=True)
class RestrictionEdges:
    """Stand-ins for the angles before the first and after the last optimum.

    ``*_low`` plays the role of index 0 and ``*_high`` of index ``P+1``.
    With ``pinch`` set to some ``eps`` in (0, 1), each edge is pulled toward the
    adjacent previous optimum by that fraction of the gap.
    """

    gamma_low: float = 0.0
    gamma_high: float = TWO_PI
    beta_low: float = 0.0
    beta_high: float = TWO_PI
    pinch: Optional[float] = None

    def __post_init__(self):
        if self.gamma_low > self.gamma_high or self.beta_low > self.beta_high:
            raise ValueError("edge bounds need low <= high")
        if self.pinch is not None and not 0 <= self.pinch < 1:
            raise ValueError("pinch fraction must lie in [0, 1)")


def _soften(value: float, factor_sign: int, delta: float, b: int) -> float:
    if value == 0 and delta > 0:
        # (1 +/- delta) cannot move a zero bound; widen by a fraction of one cell instead
        return factor_sign * delta * math.pi / b
    return value * (1 + factor_sign * delta)


def restricted_interval(prev: Sequence[float], i: int, low_edge: float, high_edge: float,
                        delta: float, b: int) -> tuple[float, float]:
    """Bounds for new angle ``i`` (1-based) of one parameter family."""
    full = [low_edge, *prev, high_edge]
    lo = _soften(full[i - 1], -1, delta, b)
    hi = _soften(full[i], +1, delta, b)
    return (lo, hi) if lo <= hi else (hi, lo)


def restrict(previous: Schedule, delta: float, edges: RestrictionEdges = RestrictionEdges(),
             b: int = 30) -> SearchSpace:
    """Search space for depth ``P+1`` from the depth-``P`` optimum."""
    if b < 2:
        raise ValueError("b must be at least 2")
    depth = previous.depth
    g_lo, g_hi = edges.gamma_low, edges.gamma_high
    b_lo, b_hi = edges.beta_low, edges.beta_high
    if edges.pinch is not None and depth:
        eps = edges.pinch
        g_lo += eps * (previous.gammas[0] - g_lo)
        g_hi -= eps * (g_hi - previous.gammas[-1])
        b_lo += eps * (previous.betas[0] - b_lo)
        b_hi -= eps * (b_hi - previous.betas[-1])
    grids = []
    for i in range(1, depth + 2):
        for prev, lo_edge, hi_edge in ((previous.gammas, g_lo, g_hi), (previous.betas, b_lo, b_hi)):
            lo, hi = restricted_interval(prev, i, lo_edge, hi_edge, delta, b)
            grids.append(np.linspace(lo, hi, b))
    return SearchSpace(tuple(grids), mirror=False)


GamePlayer = Callable[[SearchSpace, Callable, MctsConfig], GameResult]


def run_iterative(problem, p_max: int, base_config: MctsConfig = MctsConfig(),
                  softening: SofteningSchedule = SofteningSchedule(),
                  edges: RestrictionEdges = RestrictionEdges(),
                  resume: Sequence[GameResult] = (),
                  play: GamePlayer = play_game,
                  on_depth: Optional[Callable[[GameResult], None]] = None) -> list[GameResult]:
    """Depth 1 searches the full (mirror-folded) space; each later depth restricts
    around the previous depth's chosen schedule.

    ``problem`` is an instance, a ``DiagonalCost``, or an angle -> energy callable.
    ``resume`` holds already finished depths (1..k) to continue from.
    """
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    if callable(problem) and not isinstance(problem, DiagonalCost):
        oracle = problem
    else:
        diagonal = problem if isinstance(problem, DiagonalCost) else build_diagonal(problem)
        oracle = partial(evaluate_cost, diagonal)

    results = list(resume)
    for depth in range(len(results) + 1, p_max + 1):
        if depth == 1:
            space = SearchSpace.unrestricted(1, base_config.b)
        else:
            space = restrict(results[-1].schedule, softening.delta(depth), edges, base_config.b)
        config = dataclasses.replace(base_config, seed=derive_seed(base_config.seed, depth))
        result = play(space, oracle, config)
        results.append(result)
        if on_depth is not None:
            on_depth(result)
    return results
