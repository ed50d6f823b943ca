"""MCTS combined with continuous local descent.

Two combinations are provided: descending from the schedules suggested by
plain MCTS games, and MCTS games whose rollout rewards are the energies of the
local minima reached from each leaf ("basin" rewards).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Union

import numpy as np

from .mcts import GameResult, MctsConfig, SearchSpace, play_game
from .problems import DiagonalCost, build_diagonal
from .qaoa import Schedule, cost_gradient, evaluate_cost
from .ssr import derive_seed


class MinimizerError(RuntimeError):
    pass


@dataclass
class LocalMinimizerConfig:
    h: float = 1e-5
    tol: float = 1e-6
    max_iter: int = 500
    # "fd" (central differences) or "adjoint" (exact, only for QAOA costs)
    gradient: str = "fd"

    def __post_init__(self):
        if self.h <= 0 or self.tol <= 0:
            raise ValueError("h and tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.gradient not in ("fd", "adjoint"):
            raise ValueError("gradient must be 'fd' or 'adjoint'")


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    nit: int
    nfev: int
    converged: bool


def central_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    grad = np.empty_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = h
        grad[k] = (fun(x + step) - fun(x - step)) / (2 * h)
    return grad


def bfgs(fun: Callable[[np.ndarray], float], x0, config: LocalMinimizerConfig = LocalMinimizerConfig(),
         value_and_grad: Optional[Callable[[np.ndarray], tuple[float, np.ndarray]]] = None) -> MinimizeResult:
    """Quasi-Newton descent with an inverse-Hessian BFGS update and Armijo backtracking.

    Only steps that lower ``fun`` are accepted, so the result never lies above
    the start.
    """
    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        value = float(fun(x))
        if not math.isfinite(value):
            raise MinimizerError(f"non-finite cost {value} at x={x.tolist()} after {nfev} evaluations")
        return value

    if value_and_grad is None:
        def fg(x):
            return f(x), central_gradient(f, x, config.h)
    else:
        def fg(x):
            nonlocal nfev
            nfev += 1
            value, grad = value_and_grad(x)
            if not math.isfinite(value):
                raise MinimizerError(f"non-finite cost {value} at x={x.tolist()}")
            return float(value), np.asarray(grad, dtype=float)

    x = np.asarray(x0, dtype=float).copy()
    fx, g = fg(x)
    dim = x.size
    inv_h = np.eye(dim)
    nit = 0
    converged = False
    first = True
    while nit < config.max_iter:
        if np.linalg.norm(g) <= config.tol:
            converged = True
            break
        direction = -inv_h @ g
        slope = g @ direction
        if slope >= 0:
            inv_h = np.eye(dim)
            direction = -g
            slope = -(g @ g)
        t = 1.0
        while True:
            x_new = x + t * direction
            f_new = f(x_new)
            if f_new <= fx + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-14:
                break
        if f_new > fx + 1e-4 * t * slope or f_new >= fx and t < 1e-14:
            # no acceptable decrease along the search direction: stationary to working precision
            break
        nit += 1
        _, g_new = fg(x_new) if value_and_grad is not None else (f_new, central_gradient(f, x_new, config.h))
        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > 1e-12:
            if first:
                inv_h = np.eye(dim) * (sy / (y @ y))
                first = False
            rho = 1.0 / sy
            v = np.eye(dim) - rho * np.outer(s, y)
            inv_h = v @ inv_h @ v.T + rho * np.outer(s, s)
        x, fx, g = x_new, f_new, g_new
    return MinimizeResult(x, fx, float(np.linalg.norm(g)), nit, nfev, converged)


Problem = Union[DiagonalCost, Callable[[np.ndarray], float], object]


def _cost_functions(problem, config: LocalMinimizerConfig):
    if isinstance(problem, DiagonalCost) or not callable(problem):
        diagonal = problem if isinstance(problem, DiagonalCost) else build_diagonal(problem)
        fun = partial(evaluate_cost, diagonal)
        vg = partial(cost_gradient, diagonal) if config.gradient == "adjoint" else None
        return fun, vg
    if config.gradient == "adjoint":
        raise ValueError("adjoint gradients need a QAOA cost, not a plain callable")
    return problem, None


def local_minimize(problem, start, config: LocalMinimizerConfig = LocalMinimizerConfig()
                   ) -> tuple[Schedule, float]:
    """Descend from ``start`` (Schedule or interleaved angles) to a nearby local minimum."""
    result = local_minimize_full(problem, start, config)
    return Schedule.from_angles(result.x), result.fun


def local_minimize_full(problem, start, config: LocalMinimizerConfig = LocalMinimizerConfig()
                        ) -> MinimizeResult:
    x0 = start.angles if isinstance(start, Schedule) else np.asarray(start, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise MinimizerError("start point is not finite")
    fun, vg = _cost_functions(problem, config)
    return bfgs(fun, x0, config, vg)


@dataclass
class DescentOutcome:
    schedule: Schedule
    energy: float
    games: list[GameResult] = field(default_factory=list)
    descended: list[tuple[Schedule, float]] = field(default_factory=list)
    n_fev_local: int = 0


def mcts_then_descend(problem, depth: int, mcts_config: MctsConfig = MctsConfig(),
                      minimizer_config: LocalMinimizerConfig = LocalMinimizerConfig(),
                      repeats: int = 10) -> DescentOutcome:
    """Best of ``repeats`` local descents, each started from an unrestricted MCTS game."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    diagonal = problem if isinstance(problem, DiagonalCost) else build_diagonal(problem)
    oracle = partial(evaluate_cost, diagonal)
    space = SearchSpace.unrestricted(depth, mcts_config.b)
    outcome = DescentOutcome(schedule=None, energy=math.inf)
    for r in range(repeats):
        config = dataclasses.replace(mcts_config, seed=derive_seed(mcts_config.seed, r))
        game = play_game(space, oracle, config)
        local = local_minimize_full(diagonal, game.schedule, minimizer_config)
        schedule = Schedule.from_angles(local.x)
        outcome.games.append(game)
        outcome.descended.append((schedule, local.fun))
        outcome.n_fev_local += local.nfev
        if local.fun < outcome.energy:
            outcome.schedule, outcome.energy = schedule, local.fun
    return outcome


class BasinOracle:
    """Leaf energy = energy of the local minimum reached from the leaf, memoized."""

    def __init__(self, problem, config: LocalMinimizerConfig = LocalMinimizerConfig()):
        self.problem = problem
        self.config = config
        self.minima: dict[tuple, tuple[np.ndarray, float]] = {}
        self.nfev = 0

    def __call__(self, angles) -> float:
        key = tuple(np.asarray(angles, dtype=float).tolist())
        hit = self.minima.get(key)
        if hit is None:
            local = local_minimize_full(self.problem, np.asarray(key), self.config)
            self.nfev += local.nfev
            hit = (local.x, local.fun)
            self.minima[key] = hit
        return hit[1]

    def minimum(self, angles) -> tuple[np.ndarray, float]:
        self(angles)
        return self.minima[tuple(np.asarray(angles, dtype=float).tolist())]


def basin_rollout_game(problem, space: SearchSpace, mcts_config: MctsConfig = MctsConfig(),
                       minimizer_config: LocalMinimizerConfig = LocalMinimizerConfig()) -> GameResult:
    """MCTS game on basin rewards; the result carries the continuous minimized schedule."""
    oracle = BasinOracle(problem, minimizer_config)
    game = play_game(space, oracle, mcts_config)
    x, energy = oracle.minimum(space.angles(game.per_turn_choices))
    return dataclasses.replace(
        game,
        schedule=Schedule.from_angles(x),
        energy=energy,
        n_fev_local=oracle.nfev,
    )
