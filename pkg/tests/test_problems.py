import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracle import brute_max_cut, brute_sat_energy, maxcut_hamiltonian, sat_hamiltonian
from qaoa_mcts.problems import (GenerationError, InvalidInstanceError, MaxCutGraph, ParseError,
                                ResourceLimitError, SatInstance, as_bitstring, build_diagonal,
                                complete_graph, cubic10_graphs, cut_size, format_dimacs,
                                format_edgelist, generate_regular_graph, generate_sat_unique,
                                load_instance, maxcut_energy, parse_dimacs, parse_edgelist,
                                sat_energy)


@st.composite
def sat_instances(draw, max_n=5, max_m=6):
    n = draw(st.integers(3, max_n))
    m = draw(st.integers(1, max_m))
    clauses = []
    for _ in range(m):
        vs = draw(st.lists(st.integers(0, n - 1), min_size=3, max_size=3, unique=True))
        negs = draw(st.lists(st.booleans(), min_size=3, max_size=3))
        clauses.append(tuple(zip(vs, negs)))
    return SatInstance(n, tuple(clauses))


@st.composite
def graphs(draw, max_n=6):
    n = draw(st.integers(2, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return MaxCutGraph(n, tuple(edges))


def test_single_clause_energies():
    inst = SatInstance(3, (((0, False), (1, False), (2, False)),))
    assert sat_energy(inst, 0b000) == 1
    assert all(sat_energy(inst, z) == 0 for z in range(1, 8))


def test_negated_literals():
    inst = SatInstance(3, (((0, True), (1, True), (2, True)),))
    assert sat_energy(inst, 0b111) == 1
    assert sat_energy(inst, 0b011) == 0


def test_k4_max_cut():
    k4 = complete_graph(4)
    d = build_diagonal(k4)
    assert k4.num_edges == 6
    assert k4.num_edges - d.ground_energy == 4 == brute_max_cut(k4)
    assert maxcut_energy(k4, 0b0011) == 2 and cut_size(k4, 0b0011) == 4


@settings(max_examples=30, deadline=None)
@given(sat_instances())
def test_sat_diagonal_matches_dense_hamiltonian(inst):
    d = build_diagonal(inst)
    assert np.allclose(d.energies, np.diag(sat_hamiltonian(inst)), atol=1e-12)
    for z in range(2**inst.n):
        bits = [(z >> i) & 1 for i in range(inst.n)]
        assert d.energies[z] == brute_sat_energy(inst, bits) == sat_energy(inst, z)


@settings(max_examples=30, deadline=None)
@given(graphs())
def test_maxcut_diagonal_matches_dense_hamiltonian(g):
    d = build_diagonal(g)
    assert np.allclose(d.energies, np.diag(maxcut_hamiltonian(g)), atol=1e-12)
    if g.num_edges:
        assert g.num_edges - d.ground_energy == brute_max_cut(g)


@settings(max_examples=30, deadline=None)
@given(sat_instances())
def test_uniform_superposition_energy_is_m_over_8(inst):
    assert abs(build_diagonal(inst).energies.mean() - inst.m / 8) < 1e-12


@settings(max_examples=30, deadline=None)
@given(graphs())
def test_uniform_superposition_energy_is_half_the_edges(g):
    assert abs(build_diagonal(g).energies.mean() - g.num_edges / 2) < 1e-12


def test_ground_states_and_levels():
    d = build_diagonal(complete_graph(4))
    assert d.ground_energy == 2
    assert set(d.ground_states) == {z for z in range(16) if bin(z).count("1") == 2}
    assert d.max_energy == 6
    with pytest.raises(ValueError):
        d.energies[0] = 1


def test_resource_limit():
    with pytest.raises(ResourceLimitError):
        build_diagonal(MaxCutGraph(30, ((0, 1),)))
    with pytest.raises(ResourceLimitError):
        build_diagonal(complete_graph(5), max_qubits=4)


@pytest.mark.parametrize("bad", [
    lambda: SatInstance(3, (((0, False), (1, False)),)),
    lambda: SatInstance(3, (((0, False), (1, False), (3, False)),)),
    lambda: MaxCutGraph(3, ((0, 0),)),
    lambda: MaxCutGraph(3, ((0, 1), (1, 0))),
    lambda: MaxCutGraph(3, ((0, 5),)),
])
def test_invalid_instances(bad):
    with pytest.raises(InvalidInstanceError):
        bad()


def test_generated_sat_instance_has_unique_solution():
    inst = generate_sat_unique(7, 3.0, seed=11)
    assert inst.n == 7 and inst.m == 21 and inst.alpha == 3.0
    assert np.count_nonzero(build_diagonal(inst).energies == 0) == 1
    assert all(len({v for v, _ in c}) == 3 for c in inst.clauses)
    assert len(set(inst.clauses)) == inst.m


def test_generation_is_deterministic():
    assert generate_sat_unique(6, 3.0, seed=3) == generate_sat_unique(6, 3.0, seed=3)
    assert generate_regular_graph(10, 3, seed=3) == generate_regular_graph(10, 3, seed=3)


def test_generation_gives_up():
    with pytest.raises(GenerationError) as info:
        generate_sat_unique(3, 1.0, seed=0, max_attempts=50)
    assert info.value.attempts == 50


def test_non_integer_clause_count():
    with pytest.raises(InvalidInstanceError):
        generate_sat_unique(7, 2.5, seed=0)


@pytest.mark.parametrize("n,degree", [(10, 3), (8, 3), (6, 4), (12, 3)])
def test_regular_graph(n, degree):
    g = generate_regular_graph(n, degree, seed=n)
    assert np.all(g.degrees() == degree)
    assert g.is_connected()
    assert g.num_edges == n * degree // 2


def test_regular_graph_parity():
    with pytest.raises(InvalidInstanceError):
        generate_regular_graph(7, 3)


@settings(max_examples=40, deadline=None)
@given(sat_instances())
def test_dimacs_round_trip(inst):
    assert parse_dimacs(format_dimacs(inst, ["generated"])) == inst


@settings(max_examples=40, deadline=None)
@given(graphs())
def test_edgelist_round_trip(g):
    assert parse_edgelist(format_edgelist(g, ["x"])) == g


def test_dimacs_terminator_and_comments():
    text = "c hello\np cnf 3 1\n1 -2\n3 0\n%\n0\n"
    inst = parse_dimacs(text)
    assert inst.clauses == (((0, False), (1, True), (2, False)),)


@pytest.mark.parametrize("text,line", [
    ("p cnf 3 1\n1 2 0\n", 2),
    ("p cnf 3 1\n1 2 3 4 0\n", 2),
    ("p cnf 3 1\n1 x 3 0\n", 2),
    ("1 2 3 0\n", 1),
    ("p cnf 3\n", 1),
    ("c only\n\np cnf 3 1\n1 2 9 0\n", 4),
])
def test_dimacs_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_dimacs(text)
    assert info.value.line == line


def test_dimacs_clause_count_mismatch():
    with pytest.raises(ParseError):
        parse_dimacs("p cnf 3 2\n1 2 3 0\n")


@pytest.mark.parametrize("text,line", [
    ("0 1\n", 1),
    ("n 3\n0 1 2\n", 2),
    ("n 3\n0 3\n", 2),
    ("n 3\n# c\n1 1\n", 3),
])
def test_edgelist_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_edgelist(text)
    assert info.value.line == line


def test_load_instance_dispatch(tmp_path):
    cnf = tmp_path / "a.cnf"
    cnf.write_text(format_dimacs(generate_sat_unique(5, 3.0, seed=1)))
    edges = tmp_path / "g.txt"
    edges.write_text(format_edgelist(complete_graph(4)))
    assert isinstance(load_instance(cnf), SatInstance)
    assert isinstance(load_instance(edges), MaxCutGraph)
    junk = tmp_path / "junk"
    junk.write_text("hello\n")
    with pytest.raises(ParseError):
        load_instance(junk)


def test_cubic10_set():
    nx = pytest.importorskip("networkx")
    gs = cubic10_graphs()
    assert len(gs) == 19
    for g in gs:
        assert g.n == 10 and g.num_edges == 15
        assert np.all(g.degrees() == 3) and g.is_connected()
    nxg = [nx.Graph(list(g.edges)) for g in gs]
    assert not any(nx.is_isomorphic(a, b) for a, b in itertools.combinations(nxg, 2))


def test_as_bitstring():
    assert as_bitstring([1, 0, 1]) == 5
    assert as_bitstring([]) == 0
