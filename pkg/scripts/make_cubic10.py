"""Regenerate the bundled set of connected 3-regular graphs on 10 vertices.

Samples random cubic graphs until 19 isomorphism classes have been seen
(the known count for 10 vertices) and writes one edge list per class,
ordered by an isomorphism-invariant signature so reruns give identical files.
"""

import argparse
from pathlib import Path

import networkx as nx

from qaoa_mcts.problems import MaxCutGraph, format_edgelist

EXPECTED = 19


def collect(seed: int, max_samples: int = 200_000) -> list[nx.Graph]:
    found: list[nx.Graph] = []
    for k in range(max_samples):
        g = nx.random_regular_graph(3, 10, seed=seed + k)
        if not nx.is_connected(g):
            continue
        if any(nx.is_isomorphic(g, h) for h in found):
            continue
        found.append(g)
        if len(found) == EXPECTED:
            return found
    raise SystemExit(f"only {len(found)} classes after {max_samples} samples")


def signature(g: nx.Graph) -> tuple:
    triangles = sum(nx.triangles(g).values()) // 3
    return (triangles, nx.diameter(g), nx.weisfeiler_lehman_graph_hash(g))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/qaoa_mcts/data/cubic10"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    graphs = sorted(collect(args.seed), key=signature)
    for k, g in enumerate(graphs):
        # relabel in BFS order from vertex 0 for readable files
        order = list(nx.bfs_tree(g, 0))
        g = nx.relabel_nodes(g, {v: i for i, v in enumerate(order)})
        edges = tuple(sorted(tuple(sorted(e)) for e in g.edges))
        graph = MaxCutGraph(10, edges)
        (out / f"graph_{k:02d}.txt").write_text(
            format_edgelist(graph, [f"connected cubic graph {k} of {EXPECTED} on 10 vertices",
                                    f"triangles {signature(g)[0]}"]))
    print(f"wrote {len(graphs)} graphs to {out}")


if __name__ == "__main__":
    main()
