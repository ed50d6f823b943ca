"""Diagnostics: leaf enumeration, tree distance, run time, approximation ratio
and aggregation of game results."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional, Sequence

import numpy as np

from .mcts import GameResult, SearchSpace
from .problems import DiagonalCost
from .qaoa import Schedule, evaluate_batch

# Goemans-Williamson performance guarantee on 3-regular graphs
GW_RATIO_CUBIC = 0.9326

DEFAULT_LEAF_CAP = 10**7
TIE_TOLERANCE = 1e-12


class LeafCapError(RuntimeError):
    pass


class UndefinedRatioError(ValueError):
    pass


def tree_distance(c: Sequence[float], c_prime: Sequence[float], periodic: bool = False,
                  sizes: Optional[Sequence[int]] = None) -> float:
    """Euclidean distance between two grid-index vectors.

    The periodic variant wraps each coordinate around its grid size.
    """
    a = np.asarray(c, dtype=float)
    b = np.asarray(c_prime, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"index vectors differ in length: {a.size} vs {b.size}")
    diff = np.abs(a - b)
    if periodic:
        if sizes is None:
            raise ValueError("periodic distance needs the grid sizes")
        s = np.asarray(sizes, dtype=float)
        diff = np.minimum(diff, s - diff)
    return float(math.sqrt(float(diff @ diff)))


def run_time(schedule) -> float:
    if isinstance(schedule, Schedule):
        return schedule.run_time
    return float(np.abs(np.asarray(schedule, dtype=float)).sum())


def approximation_ratio(diagonal: DiagonalCost, energy: float, num_edges: Optional[int] = None) -> float:
    """Cut ratio ``(N_E - E) / (N_E - E_0)``.

    ``num_edges`` defaults to the largest diagonal entry, which equals ``N_E``
    for MaxCut energies (the all-zeros string cuts nothing).
    """
    n_e = float(diagonal.max_energy if num_edges is None else num_edges)
    c_max = n_e - float(diagonal.ground_energy)
    if c_max <= 0:
        raise UndefinedRatioError("maximum cut is zero; the approximation ratio is undefined")
    return (n_e - float(energy)) / c_max


# --- leaf enumeration ------------------------------------------------------

@dataclass(frozen=True)
class LeafRecord:
    leaf_index: int
    choices: tuple[int, ...]
    schedule: Schedule
    energy: float
    energy_gap: float
    tree_distance: float
    run_time: float


def _reachable(idx: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Mask of index rows that are lexicographically <= their mirror image."""
    mirror = sizes - 1 - idx
    differ = idx != mirror
    first = np.where(differ.any(axis=1), differ.argmax(axis=1), 0)
    rows = np.arange(idx.shape[0])
    return ~differ.any(axis=1) | (idx[rows, first] < mirror[rows, first])


def _index_chunks(space: SearchSpace, chunk: int) -> Iterator[np.ndarray]:
    sizes = np.array([g.size for g in space.grids])
    total = int(np.prod(sizes))
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.stack(np.unravel_index(flat, tuple(sizes)), axis=1)
        if space.mirror:
            idx = idx[_reachable(idx, sizes)]
        if idx.size:
            yield idx


def _angles(space: SearchSpace, idx: np.ndarray) -> np.ndarray:
    return np.stack([space.grids[t][idx[:, t]] for t in range(space.num_turns)], axis=1)


class LeafEnumeration:
    """Every reachable leaf of ``space`` in lexicographic order, scored on ``diagonal``.

    Energies are computed once on construction; records referenced to the
    optimum are produced lazily by iteration.
    """

    def __init__(self, diagonal: DiagonalCost, space: SearchSpace, cap: int = DEFAULT_LEAF_CAP,
                 chunk: int = 4096):
        count = space.leaf_count()
        if count > cap:
            raise LeafCapError(f"space has {count} leaves; raise the cap to at least {count} to enumerate it")
        self.space = space
        self.chunk = chunk
        self.count = count
        parts = [evaluate_batch(diagonal, _angles(space, idx)) for idx in _index_chunks(space, chunk)]
        self.energies = np.concatenate(parts) if parts else np.empty(0)
        if self.energies.size != count:
            raise AssertionError(f"enumerated {self.energies.size} leaves, expected {count}")
        # lowest lexicographic index among leaves tied with the minimum up to rounding
        low = self.energies.min()
        self.optimum_index = int(np.argmax(self.energies <= low + TIE_TOLERANCE * max(1.0, abs(low))))
        self.optimum_energy = float(self.energies[self.optimum_index])
        self.optimum_choices = self._choices_at(self.optimum_index)

    def _choices_at(self, position: int) -> tuple[int, ...]:
        seen = 0
        for idx in _index_chunks(self.space, self.chunk):
            if position < seen + len(idx):
                return tuple(int(v) for v in idx[position - seen])
            seen += len(idx)
        raise IndexError(position)

    def __len__(self) -> int:
        return self.count

    def chunks(self) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Yields (positions, index rows, angle rows) per chunk."""
        seen = 0
        for idx in _index_chunks(self.space, self.chunk):
            pos = np.arange(seen, seen + len(idx))
            seen += len(idx)
            yield pos, idx, _angles(self.space, idx)

    def __iter__(self) -> Iterator[LeafRecord]:
        opt = np.asarray(self.optimum_choices, dtype=float)
        for pos, idx, ang in self.chunks():
            dist = np.sqrt(((idx - opt) ** 2).sum(axis=1))
            tau = np.abs(ang).sum(axis=1)
            for k in range(len(pos)):
                e = float(self.energies[pos[k]])
                yield LeafRecord(
                    leaf_index=int(pos[k]),
                    choices=tuple(int(v) for v in idx[k]),
                    schedule=Schedule.from_angles(ang[k]),
                    energy=e,
                    energy_gap=max(e - self.optimum_energy, 0.0),
                    tree_distance=float(dist[k]),
                    run_time=float(tau[k]),
                )

    def write_csv(self, stream: IO[str], extra: Optional[dict] = None) -> int:
        """One row per leaf; ``extra`` columns (e.g. the seed) are repeated on every row."""
        extra = extra or {}
        turns = self.space.num_turns
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["leaf_index", *[f"c_{t + 1}" for t in range(turns)], "energy", "energy_gap",
                         "tree_distance", "run_time", *extra])
        opt = np.asarray(self.optimum_choices, dtype=float)
        tail = [str(v) for v in extra.values()]
        rows = 0
        for pos, idx, ang in self.chunks():
            e = self.energies[pos]
            gap = np.maximum(e - self.optimum_energy, 0.0)
            dist = np.sqrt(((idx - opt) ** 2).sum(axis=1))
            tau = np.abs(ang).sum(axis=1)
            for k in range(len(pos)):
                writer.writerow([int(pos[k]), *idx[k].tolist(), fmt(e[k]), fmt(gap[k]),
                                 fmt(dist[k]), fmt(tau[k]), *tail])
            rows += len(pos)
        return rows


def enumerate_leaves(diagonal: DiagonalCost, space: SearchSpace, cap: int = DEFAULT_LEAF_CAP
                     ) -> Iterator[LeafRecord]:
    return iter(LeafEnumeration(diagonal, space, cap))


# --- aggregation -----------------------------------------------------------

def fmt(x: float) -> str:
    """Numbers in output files carry 12 significant digits."""
    return f"{float(x):.12g}"


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    best: float
    count: int


def summarize(values: Iterable[float]) -> Summary:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("nothing to aggregate")
    # population standard deviation
    return Summary(float(v.mean()), float(v.std()), float(v.min()), int(v.size))


def aggregate(results: Sequence[GameResult]) -> dict[int, Summary]:
    """Per-depth statistics of the final energies."""
    if not results:
        raise ValueError("nothing to aggregate")
    by_depth: dict[int, list[float]] = {}
    for r in results:
        by_depth.setdefault(r.depth, []).append(r.energy)
    return {p: summarize(by_depth[p]) for p in sorted(by_depth)}


def write_summary_csv(stream: IO[str], summaries: dict, key: str = "depth") -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([key, "mean", "std", "best", "count"])
    for k, s in summaries.items():
        writer.writerow([k if isinstance(k, int) else fmt(k), fmt(s.mean), fmt(s.std), fmt(s.best), s.count])
