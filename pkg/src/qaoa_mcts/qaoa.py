"""Exact statevector simulation of the QAOA ansatz.

Each layer applies the cost phase ``exp(-i gamma H_C)`` and then the
transverse-field mixer ``exp(-i beta sum_j X_j)`` to ``|+>^n``.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from functools import lru_cache

import numpy as np

from .problems import MAX_QUBITS, DiagonalCost

# qubits per block when the mixer is applied as a dense block unitary
_MIXER_BLOCK = 6


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """QAOA angles ``(gamma_1, beta_1, ..., gamma_P, beta_P)`` in radians."""

    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        b = tuple(float(x) for x in self.betas)
        if len(g) != len(b):
            raise ValueError(f"{len(g)} gammas but {len(b)} betas")
        if not np.all(np.isfinite(g + b)):
            raise ValueError("schedule angles must be finite")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "betas", b)

    @classmethod
    def from_angles(cls, angles) -> "Schedule":
        """Build from the interleaved sequence ``gamma_1, beta_1, gamma_2, ...``."""
        a = np.asarray(angles, dtype=float).reshape(-1)
        if a.size % 2:
            raise ValueError("interleaved angle sequence must have even length")
        return cls(tuple(a[0::2]), tuple(a[1::2]))

    @property
    def depth(self) -> int:
        return len(self.gammas)

    @property
    def angles(self) -> np.ndarray:
        out = np.empty(2 * self.depth)
        out[0::2] = self.gammas
        out[1::2] = self.betas
        return out

    @property
    def run_time(self) -> float:
        return float(sum(abs(x) for x in self.gammas) + sum(abs(x) for x in self.betas))

    def __neg__(self) -> "Schedule":
        return Schedule(tuple(-x for x in self.gammas), tuple(-x for x in self.betas))

    def to_dict(self) -> dict:
        return {"gammas": list(self.gammas), "betas": list(self.betas)}

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        return cls(tuple(d["gammas"]), tuple(d["betas"]))


def _as_angles(schedule) -> np.ndarray:
    if isinstance(schedule, Schedule):
        return schedule.angles
    a = np.asarray(schedule, dtype=float).reshape(-1)
    if a.size % 2:
        raise ValueError("interleaved angle sequence must have even length")
    return a


def prepare_plus(n: int) -> np.ndarray:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count {n} outside [1, {MAX_QUBITS}]")
    return np.full(2**n, 2.0 ** (-n / 2), dtype=complex)


def _check_dim(state: np.ndarray, n: int) -> None:
    if state.shape[-1] != 2**n:
        raise DimensionError(f"state has dimension {state.shape[-1]}, expected {2**n}")


def cost_phases(diagonal: DiagonalCost, gamma: float) -> np.ndarray:
    return np.exp(-1j * gamma * diagonal._levels)[diagonal._level_index]


def apply_cost_phase(state: np.ndarray, diagonal: DiagonalCost, gamma: float) -> np.ndarray:
    _check_dim(state, diagonal.n)
    return state * cost_phases(diagonal, gamma)


@lru_cache(maxsize=None)
def _hamming(k: int) -> np.ndarray:
    z = np.arange(2**k)
    x = z[:, None] ^ z[None, :]
    return np.array([[bin(v).count("1") for v in row] for row in x])


def _block_rotation(k: int, beta: float) -> np.ndarray:
    """``exp(-i beta X)^{(x) k}``: entry (x, y) is cos^(k-d) (-i sin)^d with d = popcount(x^y)."""
    c, s = math.cos(beta), -1j * math.sin(beta)
    table = np.array([c ** (k - j) * s**j for j in range(k + 1)])
    return table[_hamming(k)]


def apply_mixer(state: np.ndarray, n: int, beta: float) -> np.ndarray:
    """``exp(-i beta sum_j X_j)`` on a state or on a batch of states (leading axes)."""
    _check_dim(state, n)
    batch = state.shape[:-1]
    if n <= 2 * _MIXER_BLOCK:
        # two blocks: the rotation factorizes as U_hi (x) U_lo acting on a 2^hi x 2^lo matrix
        lo = (n + 1) // 2
        hi = n - lo
        m = state.reshape(batch + (2**hi, 2**lo)) @ _block_rotation(lo, beta)
        if hi:
            m = _block_rotation(hi, beta) @ m
        return m.reshape(state.shape)
    out = state
    low = 1
    left = n
    while left > 0:
        k = min(_MIXER_BLOCK, left)
        out = np.matmul(_block_rotation(k, beta), out.reshape(batch + (-1, 2**k, low))).reshape(state.shape)
        low *= 2**k
        left -= k
    return out


def apply_mixer_per_qubit(state: np.ndarray, n: int, beta) -> np.ndarray:
    """Mixer as ``n`` single-qubit rotations; ``beta`` may be a vector for a batch of states."""
    _check_dim(state, n)
    batch = state.shape[:-1]
    c = np.cos(beta)
    s = -1j * np.sin(beta)
    if batch:
        c = np.reshape(c, batch + (1, 1))
        s = np.reshape(s, batch + (1, 1))
    out = state
    for q in range(n):
        v = out.reshape(batch + (-1, 2, 2**q))
        a, b = v[..., 0, :], v[..., 1, :]
        out = np.stack((c * a + s * b, s * a + c * b), axis=-2).reshape(state.shape)
    return out


def qaoa_state(diagonal: DiagonalCost, schedule) -> np.ndarray:
    angles = _as_angles(schedule)
    psi = prepare_plus(diagonal.n)
    for gamma, beta in zip(angles[0::2], angles[1::2]):
        psi = psi * cost_phases(diagonal, gamma)
        psi = apply_mixer(psi, diagonal.n, beta)
    return psi


def expectation(diagonal: DiagonalCost, state: np.ndarray) -> float:
    prob = state.real**2 + state.imag**2
    return float(prob @ diagonal.energies)


def evaluate_cost(diagonal: DiagonalCost, schedule) -> float:
    """Variational energy ``<gamma, beta| H_C |gamma, beta>``."""
    return expectation(diagonal, qaoa_state(diagonal, schedule))


def evaluate_with_overlap(diagonal: DiagonalCost, schedule) -> tuple[float, float]:
    """Energy and total probability on the ground states."""
    psi = qaoa_state(diagonal, schedule)
    prob = psi.real**2 + psi.imag**2
    return float(prob @ diagonal.energies), float(prob[list(diagonal.ground_states)].sum())


def evaluate_batch(diagonal: DiagonalCost, angles: np.ndarray) -> np.ndarray:
    """Energies for a ``(batch, 2P)`` array of interleaved schedules."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    batch = angles.shape[0]
    psi = np.broadcast_to(prepare_plus(diagonal.n), (batch, diagonal.dim)).copy()
    levels, idx = diagonal._levels, diagonal._level_index
    for layer in range(angles.shape[1] // 2):
        gamma = angles[:, 2 * layer]
        psi *= np.exp(-1j * np.outer(gamma, levels))[:, idx]
        # grid scans repeat few distinct betas; one block rotation serves each group
        betas, groups = np.unique(angles[:, 2 * layer + 1], return_inverse=True)
        if betas.size * 4 <= batch:
            for k, beta in enumerate(betas):
                rows = np.flatnonzero(groups == k)
                psi[rows] = apply_mixer(psi[rows], diagonal.n, beta)
        else:
            psi = apply_mixer_per_qubit(psi, diagonal.n, angles[:, 2 * layer + 1])
    prob = psi.real**2 + psi.imag**2
    return prob @ diagonal.energies.astype(float)


def _sum_x(state: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(state)
    for q in range(n):
        v = state.reshape(-1, 2, 2**q)
        out += v[:, ::-1, :].reshape(-1)
    return out


def cost_gradient(diagonal: DiagonalCost, schedule) -> tuple[float, np.ndarray]:
    """Energy and exact gradient w.r.t. the interleaved angles (adjoint method)."""
    angles = _as_angles(schedule)
    n = diagonal.n
    energies = diagonal.energies.astype(float)
    psi = qaoa_state(diagonal, angles)
    lam = energies * psi
    value = float(np.vdot(psi, lam).real)
    grad = np.empty_like(angles)
    for layer in range(angles.size // 2 - 1, -1, -1):
        gamma, beta = angles[2 * layer], angles[2 * layer + 1]
        grad[2 * layer + 1] = 2 * np.vdot(lam, _sum_x(psi, n)).imag
        psi = apply_mixer(psi, n, -beta)
        lam = apply_mixer(lam, n, -beta)
        grad[2 * layer] = 2 * np.vdot(lam, energies * psi).imag
        back = cost_phases(diagonal, -gamma)
        psi = psi * back
        lam = lam * back
    return value, grad
