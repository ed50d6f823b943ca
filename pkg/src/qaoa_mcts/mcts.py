"""Monte Carlo Tree Search over discretized QAOA angle sequences.

A game has ``2P`` turns; turn ``t`` fixes the ``t``-th angle of the interleaved
sequence ``(gamma_1, beta_1, ..., gamma_P, beta_P)`` by picking one of the
turn's grid values. A leaf is a complete schedule and is scored with
``exp(-nu * energy)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .qaoa import Schedule

TWO_PI = 2 * math.pi

VARIANTS = ("vanilla", "single_player")
FINAL_MOVES = ("max_child", "robust_child", "best_path")

CostOracle = Callable[[np.ndarray], float]


class ConfigError(ValueError):
    pass


class ContractError(RuntimeError):
    """A tree operation was called outside its precondition."""


# --- search space ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SearchSpace:
    """Per-turn angle grids.

    With ``mirror=True`` the leaf set is folded under ``theta -> 2pi - theta``
    (applied to every angle at once): only the lexicographically smaller leaf
    of each mirror pair is reachable. For an even branching factor this simply
    limits the first angle to the half ``[0, pi]``.
    """

    grids: tuple[np.ndarray, ...]
    mirror: bool = False

    def __post_init__(self):
        grids = tuple(np.asarray(g, dtype=float).copy() for g in self.grids)
        if not grids or len(grids) % 2:
            raise ConfigError("a search space needs an even, non-zero number of turns")
        for t, g in enumerate(grids):
            if g.ndim != 1 or g.size == 0:
                raise ConfigError(f"turn {t} grid is empty")
            if not np.all(np.isfinite(g)):
                raise ConfigError(f"turn {t} grid has non-finite values")
            if np.any(np.diff(g) < 0):
                raise ConfigError(f"turn {t} grid is not ascending")
            g.setflags(write=False)
        if self.mirror:
            for t, g in enumerate(grids):
                if not np.allclose(g + g[::-1], TWO_PI, atol=1e-12):
                    raise ConfigError(f"turn {t} grid is not mirror-symmetric about pi")
        object.__setattr__(self, "grids", grids)

    @classmethod
    def unrestricted(cls, depth: int, b: int = 30) -> "SearchSpace":
        """``b`` evenly spaced cell midpoints over ``[0, 2pi)`` per turn, mirror-folded."""
        if depth < 1 or b < 2:
            raise ConfigError("need depth >= 1 and b >= 2")
        grid = (np.arange(b) + 0.5) * TWO_PI / b
        return cls(tuple(grid for _ in range(2 * depth)), mirror=True)

    @property
    def num_turns(self) -> int:
        return len(self.grids)

    @property
    def depth(self) -> int:
        return len(self.grids) // 2

    def num_choices(self, turn: int, symmetric: bool = False) -> int:
        """Children available at ``turn``; ``symmetric`` marks a self-mirror prefix."""
        b = self.grids[turn].size
        if self.mirror and symmetric:
            return (b + 1) // 2
        return b

    def is_mirror_fixed(self, turn: int, index: int) -> bool:
        return self.mirror and 2 * index == self.grids[turn].size - 1

    def angles(self, choices: Sequence[int]) -> np.ndarray:
        return np.array([self.grids[t][c] for t, c in enumerate(choices)])

    def schedule(self, choices: Sequence[int]) -> Schedule:
        return Schedule.from_angles(self.angles(choices))

    def leaf_count(self) -> int:
        sizes = [g.size for g in self.grids]
        total = math.prod(sizes)
        if not self.mirror:
            return total
        # fixed points of the fold: every choice sits on the grid's centre
        fixed = int(all(s % 2 == 1 for s in sizes))
        return (total + fixed) // 2

    def to_dict(self) -> dict:
        return {"grids": [g.tolist() for g in self.grids], "mirror": self.mirror}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpace":
        return cls(tuple(np.asarray(g) for g in d["grids"]), bool(d.get("mirror", False)))


# --- tree ------------------------------------------------------------------

@dataclass(eq=False, slots=True)
class TreeNode:
    depth: int
    choice: Optional[int] = None
    symmetric: bool = False
    w: float = 0.0
    n: int = 0
    children: Optional[list] = None
    unexpanded: Optional[list] = None
    best_reward: float = -math.inf
    best_leaf: Optional[tuple] = None

    def prepare(self, space: SearchSpace) -> None:
        if self.children is None:
            k = space.num_choices(self.depth, self.symmetric)
            self.children = [None] * k
            self.unexpanded = list(range(k))

    def add_child(self, index: int, space: SearchSpace) -> "TreeNode":
        self.prepare(space)
        child = TreeNode(
            depth=self.depth + 1,
            choice=index,
            symmetric=self.symmetric and space.is_mirror_fixed(self.depth, index),
        )
        self.children[index] = child
        self.unexpanded.remove(index)
        return child

    def visited_children(self) -> list["TreeNode"]:
        if self.children is None:
            return []
        return [c for c in self.children if c is not None and c.n > 0]

    def record(self, reward_value: float, leaf: tuple) -> None:
        self.n += 1
        self.w += reward_value
        if reward_value > self.best_reward:
            self.best_reward = reward_value
            self.best_leaf = leaf


@dataclass
class MctsConfig:
    C: float = math.sqrt(2)
    nu: float = 0.5
    b: int = 30
    cycles_initial: int = 1000
    cycles_per_turn: int = 800
    noise_sigma: float = 0.0
    variant: str = "vanilla"
    # None picks best_path for the single-player variant and max_child otherwise
    final_move: Optional[str] = None
    seed: Optional[int] = None
    reuse_tree: bool = True

    def __post_init__(self):
        if self.C < 0:
            raise ConfigError("C must be non-negative")
        if self.nu <= 0:
            raise ConfigError("nu must be positive")
        if self.b < 2:
            raise ConfigError("b must be at least 2")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if self.cycles_initial < 0 or self.cycles_per_turn < 0:
            raise ConfigError("cycle budgets must be non-negative")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.final_move is not None and self.final_move not in FINAL_MOVES:
            raise ConfigError(f"final_move must be one of {FINAL_MOVES}")

    @property
    def criterion(self) -> str:
        if self.final_move is not None:
            return self.final_move
        return "best_path" if self.variant == "single_player" else "max_child"

    def cycles_for_turn(self, turn: int, num_turns: int) -> int:
        if turn == num_turns - 1:
            return 0
        return self.cycles_per_turn + (self.cycles_initial if turn == 0 else 0)

    def total_cycles(self, depth: int) -> int:
        return sum(self.cycles_for_turn(t, 2 * depth) for t in range(2 * depth))


@dataclass
class GameResult:
    schedule: Schedule
    energy: float
    best_rollout_energy: float
    n_fev: int
    per_turn_choices: list[int]
    seed: Optional[int]
    best_rollout_choices: list[int] = field(default_factory=list)
    n_fev_local: int = 0

    @property
    def depth(self) -> int:
        return self.schedule.depth

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "schedule": self.schedule.to_dict(),
            "energy": self.energy,
            "best_rollout_energy": self.best_rollout_energy,
            "n_fev": self.n_fev,
            "n_fev_local": self.n_fev_local,
            "per_turn_choices": list(self.per_turn_choices),
            "best_rollout_choices": list(self.best_rollout_choices),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GameResult":
        return cls(
            schedule=Schedule.from_dict(d["schedule"]),
            energy=d["energy"],
            best_rollout_energy=d["best_rollout_energy"],
            n_fev=d["n_fev"],
            per_turn_choices=list(d["per_turn_choices"]),
            seed=d.get("seed"),
            best_rollout_choices=list(d.get("best_rollout_choices", [])),
            n_fev_local=d.get("n_fev_local", 0),
        )


# --- primitives ------------------------------------------------------------

def reward(energy: float, nu: float = 0.5) -> float:
    return math.exp(-nu * energy)


def perturb_reward(energy: float, noise_sigma: float, rng: np.random.Generator) -> float:
    """Add one Gaussian measurement-noise draw to an energy (before the reward map)."""
    if noise_sigma == 0:
        return energy
    return energy + float(rng.normal(0.0, noise_sigma))


def uct_select(parent: TreeNode, C: float) -> int:
    """Child index maximizing ``w/n + C sqrt(2 ln N / n)``; lowest index wins ties."""
    if parent.n <= 0:
        raise ContractError("UCT selection on a node with zero visits")
    if not parent.children or parent.unexpanded:
        raise ContractError("UCT selection on a node that is not fully expanded")
    log_term = 2.0 * math.log(parent.n)
    best_index, best_score = -1, -math.inf
    for index, child in enumerate(parent.children):
        if child.n == 0:
            score = math.inf
        else:
            score = child.w / child.n + C * math.sqrt(log_term / child.n)
        if score > best_score:
            best_index, best_score = index, score
    return best_index


def final_move(root: TreeNode, criterion: str = "max_child") -> int:
    candidates = root.visited_children()
    if not candidates:
        raise ContractError("no visited children to choose a move from")
    if criterion == "max_child":
        key = lambda c: c.w / c.n
    elif criterion == "robust_child":
        key = lambda c: c.n
    elif criterion == "best_path":
        key = lambda c: c.best_reward
    else:
        raise ConfigError(f"unknown final-move criterion {criterion!r}")
    best = candidates[0]
    for c in candidates[1:]:
        if key(c) > key(best):
            best = c
    return best.choice


@dataclass
class Rollout:
    leaf: tuple
    energy: float
    observed_energy: float
    reward: float


def run_cycle(root: TreeNode, prefix: Sequence[int], space: SearchSpace,
              cost_oracle: CostOracle, config: MctsConfig,
              rng: np.random.Generator) -> Rollout:
    """One selection / expansion / rollout / backpropagation pass.

    Here ``cost_oracle`` takes the leaf as a tuple of grid indices (one per
    turn, ``prefix`` included) and is queried exactly once.
    """
    num_turns = space.num_turns
    node = root
    path = [root]
    choices = list(prefix)
    while node.depth < num_turns:
        node.prepare(space)
        if node.unexpanded:
            index = node.unexpanded[int(rng.integers(len(node.unexpanded)))]
            node = node.add_child(index, space)
            path.append(node)
            choices.append(index)
            break
        index = uct_select(node, config.C)
        node = node.children[index]
        path.append(node)
        choices.append(index)

    symmetric = node.symmetric
    for turn in range(node.depth, num_turns):
        index = int(rng.integers(space.num_choices(turn, symmetric)))
        symmetric = symmetric and space.is_mirror_fixed(turn, index)
        choices.append(index)

    leaf = tuple(choices)
    energy = cost_oracle(leaf)
    observed = perturb_reward(energy, config.noise_sigma, rng)
    r = reward(observed, config.nu)
    for visited in path:
        visited.record(r, leaf)
    return Rollout(leaf, energy, observed, r)


def expand_best_path(root: TreeNode, space: SearchSpace) -> int:
    """Store the root's best rollout path down to its leaf; returns nodes created.

    New nodes receive the memorized reward once, so their mean is defined
    without another cost evaluation.
    """
    if root.best_leaf is None:
        return 0
    leaf = root.best_leaf
    created = 0
    node = root
    for turn in range(root.depth, space.num_turns):
        node.prepare(space)
        index = leaf[turn]
        child = node.children[index]
        if child is None:
            child = node.add_child(index, space)
            child.record(node.best_reward, leaf)
            created += 1
        node = child
    return created


class _LeafCache:
    """Noiseless energies keyed by leaf; every query still counts as an evaluation."""

    def __init__(self, space: SearchSpace, cost_oracle: CostOracle):
        self.space = space
        self.cost_oracle = cost_oracle
        self.values: dict[tuple, float] = {}
        self.queries = 0

    def __call__(self, leaf: tuple) -> float:
        self.queries += 1
        value = self.values.get(leaf)
        if value is None:
            value = float(self.cost_oracle(self.space.angles(leaf)))
            self.values[leaf] = value
        return value


def play_game(space: SearchSpace, cost_oracle: CostOracle, config: MctsConfig) -> GameResult:
    """Play all ``2P`` turns, committing one angle per turn.

    ``cost_oracle`` maps an interleaved angle array to a noiseless energy.
    """
    num_turns = space.num_turns
    for turn in range(num_turns - 1):
        cycles = config.cycles_for_turn(turn, num_turns)
        if cycles < space.grids[turn].size:
            raise ConfigError(
                f"turn {turn} gets {cycles} cycles, fewer than its {space.grids[turn].size} choices"
            )
    rng = np.random.default_rng(config.seed)
    evaluate = _LeafCache(space, cost_oracle)
    criterion = config.criterion
    single_player = config.variant == "single_player"

    root = TreeNode(depth=0, symmetric=space.mirror)
    prefix: list[int] = []
    best_energy, best_leaf = math.inf, None
    carried_leaf = None

    for turn in range(num_turns):
        for _ in range(config.cycles_for_turn(turn, num_turns)):
            rollout = run_cycle(root, prefix, space, evaluate, config, rng)
            if rollout.energy < best_energy:
                best_energy, best_leaf = rollout.energy, rollout.leaf
        if single_player:
            expand_best_path(root, space)
        if root.visited_children():
            index = final_move(root, criterion)
        else:
            # fresh root with no statistics (final turn): follow the best rollout seen through it
            source = root.best_leaf or carried_leaf
            if source is None:
                raise ContractError(f"turn {turn}: no statistics to choose a move from")
            index = source[turn]
        prefix.append(index)
        child = root.children[index] if root.children else None
        if child is None:
            child = TreeNode(depth=turn + 1, choice=index,
                             symmetric=root.symmetric and space.is_mirror_fixed(turn, index))
        if child.best_leaf is not None:
            carried_leaf = child.best_leaf
        if config.reuse_tree:
            root = child
        else:
            root = TreeNode(depth=turn + 1, choice=index, symmetric=child.symmetric)

    schedule = space.schedule(prefix)
    # final assessment is noiseless and not charged to the search budget
    energy = evaluate.values.get(tuple(prefix))
    if energy is None:
        energy = float(cost_oracle(schedule.angles))
    return GameResult(
        schedule=schedule,
        energy=energy,
        best_rollout_energy=best_energy,
        n_fev=evaluate.queries,
        per_turn_choices=prefix,
        seed=config.seed,
        best_rollout_choices=list(best_leaf) if best_leaf else [],
    )
