"""Classical problem instances (3-SAT, MaxCut) and their diagonal cost spectra.

Bitstrings are little-endian: qubit/variable ``i`` is bit ``i`` of the integer
``z``. A 3-SAT variable ``x_i`` takes the value of bit ``i``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence, Union

import numpy as np

MAX_QUBITS = 24


class InvalidInstanceError(ValueError):
    """Structurally invalid problem instance."""


class ResourceLimitError(RuntimeError):
    """Instance too large for exhaustive treatment."""


class GenerationError(RuntimeError):
    """Rejection sampling ran out of attempts."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


Literal = tuple[int, bool]  # (variable index, negated)


@dataclass(frozen=True)
class SatInstance:
    n: int
    clauses: tuple[tuple[Literal, Literal, Literal], ...]

    def __post_init__(self):
        clauses = tuple(tuple((int(v), bool(neg)) for v, neg in c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.n < 1:
            raise InvalidInstanceError(f"n must be positive, got {self.n}")
        for a, clause in enumerate(clauses):
            if len(clause) != 3:
                raise InvalidInstanceError(f"clause {a} has {len(clause)} literals, expected 3")
            for v, _ in clause:
                if not 0 <= v < self.n:
                    raise InvalidInstanceError(f"clause {a}: variable {v} out of range [0, {self.n})")

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def alpha(self) -> float:
        """Clause density m/n."""
        return self.m / self.n


@dataclass(frozen=True)
class MaxCutGraph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        edges = []
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise InvalidInstanceError(f"self-loop on vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidInstanceError(f"edge ({i}, {j}) out of range [0, {self.n})")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InvalidInstanceError(f"duplicate edge {key}")
            seen.add(key)
            edges.append(key)
        object.__setattr__(self, "edges", tuple(edges))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def is_connected(self) -> bool:
        adj = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


Instance = Union[SatInstance, MaxCutGraph]


@dataclass(frozen=True, eq=False)
class DiagonalCost:
    """Cost of every computational-basis state of an ``n``-qubit register."""

    n: int
    energies: np.ndarray
    ground_energy: float = field(init=False)
    ground_states: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        energies = np.asarray(self.energies)
        if energies.shape != (2**self.n,):
            raise InvalidInstanceError(
                f"expected {2**self.n} energies for n={self.n}, got shape {energies.shape}"
            )
        energies = energies.copy()
        energies.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        e0 = energies.min()
        object.__setattr__(self, "ground_energy", float(e0))
        object.__setattr__(self, "ground_states", tuple(int(z) for z in np.flatnonzero(energies == e0)))
        # distinct levels let phases be computed once per level instead of per amplitude
        levels, index = np.unique(energies, return_inverse=True)
        object.__setattr__(self, "_levels", levels.astype(float))
        object.__setattr__(self, "_level_index", index.reshape(-1))

    @property
    def max_energy(self) -> float:
        return float(self.energies.max())

    @property
    def dim(self) -> int:
        return 2**self.n


def _check_bitstring(n: int, z: int) -> None:
    if not 0 <= z < 2**n:
        raise InvalidInstanceError(f"bitstring {z} out of range for n={n}")


def sat_energy(instance: SatInstance, bitstring: int) -> int:
    """Number of clauses violated by the assignment ``x_i = bit i of bitstring``."""
    _check_bitstring(instance.n, bitstring)
    violated = 0
    for clause in instance.clauses:
        # a literal is false when its variable's bit equals its negation flag
        if all(((bitstring >> v) & 1) == int(neg) for v, neg in clause):
            violated += 1
    return violated


def maxcut_energy(graph: MaxCutGraph, bitstring: int) -> int:
    """Number of uncut edges (endpoints on the same side)."""
    _check_bitstring(graph.n, bitstring)
    return sum(((bitstring >> i) & 1) == ((bitstring >> j) & 1) for i, j in graph.edges)


def cut_size(graph: MaxCutGraph, bitstring: int) -> int:
    return graph.num_edges - maxcut_energy(graph, bitstring)


def _bits(n: int) -> np.ndarray:
    z = np.arange(2**n, dtype=np.int64)
    return (z[:, None] >> np.arange(n)) & 1


def build_diagonal(instance: Instance, max_qubits: int = MAX_QUBITS) -> DiagonalCost:
    n = instance.n
    if n > max_qubits:
        raise ResourceLimitError(f"n={n} exceeds the configured maximum of {max_qubits} qubits")
    bits = _bits(n)
    energies = np.zeros(2**n, dtype=np.int64)
    if isinstance(instance, SatInstance):
        for clause in instance.clauses:
            false_mask = np.ones(2**n, dtype=bool)
            for v, neg in clause:
                false_mask &= bits[:, v] == int(neg)
            energies += false_mask
    elif isinstance(instance, MaxCutGraph):
        for i, j in instance.edges:
            energies += bits[:, i] == bits[:, j]
    else:
        raise TypeError(f"unsupported instance type {type(instance).__name__}")
    return DiagonalCost(n, energies)


def random_3sat(n: int, m: int, rng: np.random.Generator) -> SatInstance:
    """Uniform random 3-SAT: distinct variables per clause, no repeated clause."""
    if n < 3:
        raise InvalidInstanceError("3-SAT needs at least 3 variables")
    clauses = []
    seen = set()
    while len(clauses) < m:
        vs = rng.choice(n, size=3, replace=False)
        negs = rng.integers(0, 2, size=3)
        clause = tuple(sorted((int(v), bool(s)) for v, s in zip(vs, negs)))
        if clause in seen:
            continue
        seen.add(clause)
        clauses.append(clause)
    return SatInstance(n, tuple(clauses))


def generate_sat_unique(n: int, alpha: float = 3.0, seed: int | None = None,
                        max_attempts: int = 100_000) -> SatInstance:
    """Rejection-sample a random 3-SAT formula with exactly one satisfying assignment."""
    m = n * alpha
    if abs(m - round(m)) > 1e-9:
        raise InvalidInstanceError(f"n*alpha = {m} is not an integer")
    m = int(round(m))
    if n > 20:
        raise ResourceLimitError(f"n={n} too large for exhaustive uniqueness check")
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        inst = random_3sat(n, m, rng)
        energies = build_diagonal(inst).energies
        if np.count_nonzero(energies == 0) == 1:
            return inst
    raise GenerationError(f"no unique-solution 3-SAT instance for n={n}, m={m}", max_attempts)


def generate_regular_graph(n: int, degree: int = 3, seed: int | None = None,
                           max_attempts: int = 100_000) -> MaxCutGraph:
    """Connected simple ``degree``-regular graph from the pairing (configuration) model.

    Whole pairings with a self-loop, a multi-edge, or more than one component
    are rejected and redrawn.
    """
    if (n * degree) % 2:
        raise InvalidInstanceError("n * degree must be even")
    if not 0 < degree < n:
        raise InvalidInstanceError("need 0 < degree < n")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), degree)
    for attempt in range(1, max_attempts + 1):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        keys = {(int(min(a, b)), int(max(a, b))) for a, b in pairs}
        if len(keys) != len(pairs):
            continue
        graph = MaxCutGraph(n, tuple(sorted(keys)))
        if graph.is_connected():
            return graph
    raise GenerationError(f"no connected {degree}-regular graph on {n} vertices", max_attempts)


# --- file formats ----------------------------------------------------------

def parse_dimacs(text: str) -> SatInstance:
    """Parse DIMACS CNF restricted to 3-literal clauses (1-indexed, sign = polarity)."""
    n = declared_m = None
    clauses = []
    current: list[tuple[int, bool]] = []
    current_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"malformed problem line {line!r}", lineno)
            try:
                n, declared_m = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"malformed problem line {line!r}", lineno) from None
            continue
        if n is None:
            raise ParseError("clause before 'p cnf' header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno) from None
            if not current:
                current_line = lineno
            if lit == 0:
                if len(current) != 3:
                    raise ParseError(f"clause has {len(current)} literals, expected 3", current_line)
                clauses.append(tuple(current))
                current = []
                continue
            if abs(lit) > n:
                raise ParseError(f"variable {abs(lit)} exceeds declared count {n}", lineno)
            current.append((abs(lit) - 1, lit < 0))
    if current:
        raise ParseError("unterminated clause", current_line)
    if n is None:
        raise ParseError("missing 'p cnf' header", 0)
    if declared_m is not None and declared_m != len(clauses):
        raise ParseError(f"header declares {declared_m} clauses, found {len(clauses)}", 0)
    return SatInstance(n, tuple(clauses))


def format_dimacs(instance: SatInstance, comments: Iterable[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {instance.n} {instance.m}")
    for clause in instance.clauses:
        lits = [-(v + 1) if neg else v + 1 for v, neg in clause]
        lines.append(" ".join(map(str, lits)) + " 0")
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str) -> MaxCutGraph:
    """Parse ``n <count>`` followed by one ``i j`` vertex pair per line (0-indexed)."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ParseError(f"expected 'n <count>' header, got {line!r}", lineno)
            try:
                n = int(parts[1])
            except ValueError:
                raise ParseError(f"bad vertex count {parts[1]!r}", lineno) from None
            continue
        if len(parts) != 2:
            raise ParseError(f"expected a vertex pair, got {line!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer vertex in {line!r}", lineno) from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"vertex index out of range [0, {n})", lineno)
        if i == j:
            raise ParseError(f"self-loop on vertex {i}", lineno)
        edges.append((i, j))
    if n is None:
        raise ParseError("missing 'n <count>' header", 0)
    try:
        return MaxCutGraph(n, tuple(edges))
    except InvalidInstanceError as exc:
        raise ParseError(str(exc), 0) from None


def format_edgelist(graph: MaxCutGraph, comments: Iterable[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"n {graph.n}")
    lines.extend(f"{i} {j}" for i, j in graph.edges)
    return "\n".join(lines) + "\n"


def load_instance(path) -> Instance:
    """Load a DIMACS (``.cnf``) or edge-list file, dispatching on content."""
    from pathlib import Path

    text = Path(path).read_text()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(("c ", "#")) or line == "c":
            continue
        if line.startswith("p"):
            return parse_dimacs(text)
        if line.startswith("n"):
            return parse_edgelist(text)
        break
    raise ParseError(f"{path}: neither DIMACS CNF nor edge list", 1)


def cubic10_graphs() -> list[MaxCutGraph]:
    """The 19 non-isomorphic connected 3-regular graphs on 10 vertices (bundled data)."""
    folder = resources.files("qaoa_mcts") / "data" / "cubic10"
    names = sorted(p.name for p in folder.iterdir() if p.name.endswith(".txt"))
    return [parse_edgelist((folder / name).read_text()) for name in names]


def complete_graph(n: int) -> MaxCutGraph:
    return MaxCutGraph(n, tuple(itertools.combinations(range(n), 2)))


def instance_label(instance: Instance) -> str:
    if isinstance(instance, SatInstance):
        return f"3sat-n{instance.n}-m{instance.m}"
    return f"maxcut-n{instance.n}-e{instance.num_edges}"


def as_bitstring(bits: Sequence[int]) -> int:
    """Little-endian bit list -> integer."""
    return sum(int(b) << i for i, b in enumerate(bits))
