"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the terminal summary.
The heavy ones (depth trend, cubic MaxCut and hybrid parity) take tens of
minutes in total on one core.
"""

import dataclasses
import math
import subprocess
import sys
from functools import partial
from pathlib import Path

import numpy as np
import pytest

from qaoa_mcts.analysis import GW_RATIO_CUBIC, LeafEnumeration, approximation_ratio, enumerate_leaves
from qaoa_mcts.hybrid import LocalMinimizerConfig, basin_rollout_game
from qaoa_mcts.mcts import MctsConfig, SearchSpace, play_game
from qaoa_mcts.problems import (MaxCutGraph, build_diagonal, complete_graph, cubic10_graphs,
                                generate_regular_graph, generate_sat_unique, random_3sat)
from qaoa_mcts.qaoa import Schedule, evaluate_cost
from qaoa_mcts.ssr import SofteningSchedule, derive_seed, restrict, run_iterative

from oracle import layerwise_energies, maxcut_hamiltonian, sat_hamiltonian

TESTS = Path(__file__).parent
REFERENCE_BUDGET = MctsConfig(b=30, cycles_initial=1000, cycles_per_turn=800, C=math.sqrt(2), nu=0.5)


@pytest.fixture(scope="module")
def sat7_instances():
    return [build_diagonal(generate_sat_unique(7, 3.0, seed=k)) for k in range(15)]


@pytest.fixture(scope="module")
def ssr_ladders(sat7_instances):
    """Iterative SSR-MCTS to P=8 on the 15 instances, shared by the depth-trend and hybrid checks."""
    return [run_iterative(d, 8, dataclasses.replace(REFERENCE_BUDGET, seed=k))
            for k, d in enumerate(sat7_instances)]


def small_instances():
    rng = np.random.default_rng(0)
    out = [random_3sat(n, m, rng) for n, m in ((3, 6), (4, 9), (4, 12))]
    out += [complete_graph(4), MaxCutGraph(4, ((0, 1), (1, 2), (2, 3), (0, 3))), complete_graph(3)]
    return out


def test_criterion_01_simulator_matches_dense_oracle(report):
    rng = np.random.default_rng(1)
    worst = 0.0
    for inst in small_instances():
        d = build_diagonal(inst)
        h = sat_hamiltonian(inst) if hasattr(inst, "clauses") else maxcut_hamiltonian(inst)
        for _ in range(100):
            angles = rng.uniform(-2 * math.pi, 2 * math.pi, 6)
            expected = layerwise_energies(h, angles)
            got = [evaluate_cost(d, angles[: 2 * p]) for p in (1, 2, 3)]
            worst = max(worst, float(np.max(np.abs(np.subtract(got, expected)))))
    ok = worst <= 1e-10
    report(1, ok, f"max |F_P - oracle| = {worst:.3g} (tol 1e-10)")
    assert ok


def test_criterion_02_symmetry_and_periodicity(report):
    rng = np.random.default_rng(2)
    diagonals = [build_diagonal(generate_sat_unique(7, 3.0, seed=0)),
                 build_diagonal(generate_regular_graph(8, 3, seed=0))]
    sym, per = 0.0, 0.0
    for d in diagonals:
        for _ in range(50):
            p = int(rng.integers(1, 5))
            angles = rng.uniform(0, 2 * math.pi, 2 * p)
            f = evaluate_cost(d, angles)
            sym = max(sym, abs(evaluate_cost(d, -angles) - f))
            shift = 2 * math.pi * rng.integers(-2, 3, 2 * p)
            per = max(per, abs(evaluate_cost(d, angles + shift) - f))
    ok = sym <= 1e-12 and per <= 1e-10
    report(2, ok, f"sign flip {sym:.3g} (tol 1e-12), 2pi shift {per:.3g} (tol 1e-10)")
    assert ok


def test_criterion_03_zero_depth_baselines(report):
    worst = 0.0
    for k in range(5):
        sat = generate_sat_unique(7, 3.0, seed=k)
        worst = max(worst, abs(evaluate_cost(build_diagonal(sat), []) - sat.m / 8))
        graph = generate_regular_graph(10, 3, seed=k)
        worst = max(worst, abs(evaluate_cost(build_diagonal(graph), []) - graph.num_edges / 2))
    for graph in cubic10_graphs():
        worst = max(worst, abs(evaluate_cost(build_diagonal(graph), []) - graph.num_edges / 2))
    ok = worst <= 1e-12
    report(3, ok, f"max |F_0 - closed form| = {worst:.3g} (tol 1e-12)")
    assert ok


def test_criterion_04_brute_force_convergence(report):
    d = build_diagonal(generate_sat_unique(5, 3.0, seed=1))
    oracle = partial(evaluate_cost, d)
    cases = [SearchSpace.unrestricted(1, 19), SearchSpace.unrestricted(2, 3)]
    hits = {}
    for space in cases:
        leaves = space.leaf_count()
        assert leaves <= 200
        best = LeafEnumeration(d, space).optimum_energy
        for variant in ("vanilla", "single_player"):
            config = MctsConfig(b=space.grids[0].size, cycles_initial=50 * leaves, cycles_per_turn=10,
                                variant=variant)
            assert config.total_cycles(space.depth) >= 50 * leaves
            count = 0
            for seed in range(100):
                game = play_game(space, oracle, dataclasses.replace(config, seed=seed))
                count += abs(game.energy - best) <= 1e-9
            hits[(space.depth, space.grids[0].size, variant)] = count
    per_variant = {v: min(c for (_, _, w), c in hits.items() if w == v) for v in ("vanilla", "single_player")}
    ok = any(c >= 95 for c in per_variant.values())
    detail = ", ".join(f"P={p} b={b} {v}: {c}/100" for (p, b, v), c in hits.items())
    report(4, ok, f"{detail} (need >= 95 for some variant on every space)")
    assert ok


@pytest.mark.slow
def test_criterion_05_vanilla_fails_beyond_depth_one(report):
    d = build_diagonal(generate_sat_unique(7, 3.0, seed=0))
    oracle = partial(evaluate_cost, d)
    vanilla, ssr, ssr_sp = [], [], []
    for seed in range(10):
        config = dataclasses.replace(REFERENCE_BUDGET, seed=seed)
        vanilla.append(play_game(SearchSpace.unrestricted(2, 30), oracle, config).energy)
        ssr.append(run_iterative(d, 2, config)[-1].energy)
        ssr_sp.append(run_iterative(d, 6, dataclasses.replace(config, variant="single_player"))[-1].energy)
    v2, s2, sp6 = np.mean(vanilla), np.mean(ssr), np.mean(ssr_sp)
    ok = v2 - s2 > 0.5 and sp6 < v2
    report(5, ok, f"vanilla P=2 {v2:.4f}, SSR P=2 {s2:.4f} (gap {v2 - s2:.4f}, need > 0.5), "
                  f"SSR-SP P=6 {sp6:.4f} (need < vanilla P=2)")
    assert ok


@pytest.mark.slow
def test_criterion_06_ssr_energy_non_increasing(report, ssr_ladders):
    means = np.array([np.mean([ladder[p].energy for ladder in ssr_ladders]) for p in range(8)])
    rises = np.diff(means)
    ok = bool(np.all(rises <= 0.05))
    report(6, ok, "means P=1..8 " + " ".join(f"{m:.4f}" for m in means) + f" (max rise {rises.max():.4f}, tol 0.05)")
    assert ok


@pytest.mark.slow
def test_criterion_07_cubic_maxcut_ratio(report):
    ratios = []
    for k, graph in enumerate(cubic10_graphs()):
        d = build_diagonal(graph)
        ladder = run_iterative(d, 10, dataclasses.replace(REFERENCE_BUDGET, seed=k))
        ratios.append([approximation_ratio(d, r.energy, graph.num_edges) for r in ladder])
    mean = np.mean(ratios, axis=0)
    ok = mean[3] >= GW_RATIO_CUBIC and 1 - mean[9] <= 0.02
    report(7, ok, f"mean r at P=4 {mean[3]:.4f} (need >= {GW_RATIO_CUBIC}), "
                  f"1-r at P=10 {1 - mean[9]:.4f} (need <= 0.02); r by P " + " ".join(f"{r:.3f}" for r in mean))
    assert ok


@pytest.mark.slow
def test_criterion_08_noise_robustness(report):
    d = build_diagonal(generate_sat_unique(7, 3.0, seed=0))
    oracle = partial(evaluate_cost, d)
    config = dataclasses.replace(REFERENCE_BUDGET, seed=0)
    softening = SofteningSchedule()
    ladder = run_iterative(d, 1, config, softening)
    space = restrict(ladder[0].schedule, softening.delta(2), b=config.b)
    best = {}
    for k, noise in enumerate((0.0, 1.0)):
        energies = [play_game(space, oracle, dataclasses.replace(config, noise_sigma=noise,
                                                                 seed=derive_seed(0, r, k))).energy
                    for r in range(15)]
        best[noise] = min(energies)
    gap = abs(best[1.0] - best[0.0])
    ok = gap <= 0.2
    report(8, ok, f"best of 15 at n_s=0 {best[0.0]:.4f}, at n_s=1 {best[1.0]:.4f} (|diff| {gap:.4f}, tol 0.2)")
    assert ok


def test_criterion_09_leaf_counts(report):
    d = build_diagonal(generate_sat_unique(7, 3.0, seed=0))
    unrestricted = sum(1 for _ in enumerate_leaves(d, SearchSpace.unrestricted(2, 30)))
    start = run_iterative(d, 1, dataclasses.replace(REFERENCE_BUDGET, seed=0))[0].schedule
    restricted = sum(1 for _ in enumerate_leaves(d, restrict(start, SofteningSchedule().delta(2), b=30)))
    ok = unrestricted == 405_000 and restricted == 810_000
    report(9, ok, f"unrestricted {unrestricted} (expect 405000), restricted {restricted} (expect 810000)")
    assert ok


@pytest.mark.slow
def test_criterion_10_basin_rollout_parity(report, sat7_instances, ssr_ladders):
    basin_config = MctsConfig(b=30, cycles_initial=0, cycles_per_turn=100)
    minimizer = LocalMinimizerConfig(gradient="adjoint")
    basin = np.zeros((5, 4))
    for k in range(5):
        for p in range(1, 5):
            game = basin_rollout_game(sat7_instances[k], SearchSpace.unrestricted(p, 30),
                                      dataclasses.replace(basin_config, seed=derive_seed(k, p)), minimizer)
            basin[k, p - 1] = game.energy
    ssr = np.array([[ssr_ladders[k][p].energy for p in range(4)] for k in range(5)])
    diff = np.abs(basin.mean(axis=0) - ssr.mean(axis=0))
    ok = bool(np.all(diff <= 0.3))
    report(10, ok, "mean basin " + " ".join(f"{e:.4f}" for e in basin.mean(axis=0))
                   + " vs SSR " + " ".join(f"{e:.4f}" for e in ssr.mean(axis=0))
                   + f" (max |diff| {diff.max():.4f}, tol 0.3)")
    assert ok


PROPERTY_SUITES = [
    ("test_analysis.py", "metric_axioms or periodic_distance_wraps or tree_distance_examples"),
    ("test_mcts.py", "reward or uct or determinism"),
    ("test_hybrid.py", "descent"),
    ("test_ssr.py", "derive_seed or determinis"),
    ("test_problems.py", "deterministic"),
]


def test_criterion_11_property_suites_standalone(report):
    outcomes = []
    for module, selection in PROPERTY_SUITES:
        proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                               str(TESTS / module), "-k", selection],
                              capture_output=True, text=True, cwd=TESTS.parent)
        outcomes.append((module, proc.returncode, proc.stdout.strip().splitlines()[-1]))
    ok = all(code == 0 for _, code, _ in outcomes)
    report(11, ok, "; ".join(f"{m}: {tail}" for m, _, tail in outcomes))
    assert ok
