"""Shared fixtures.

The law-firm friendship benchmark is shipped as its published bi-degree
sequence (71 nodes, 575 directed edges).  The original edge list is not
redistributable, so a graph realizing exactly that bi-degree sequence is
reconstructed here with a max-flow routine; every quantity the package
consumes (degrees, and anything fit to degrees) is identical to the
original's.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from dpgraph import DirectedGraph, to_edge_list_text

# (out-degree, in-degree) for vertices 1..71 of the law-firm friendship network
LAWYER_BIDEGREES = [
    (4, 5), (4, 10), (0, 4), (15, 14), (3, 5), (0, 2), (2, 2), (1, 7),
    (6, 14), (14, 4), (5, 14), (22, 8), (14, 20), (8, 6), (4, 2), (8, 10),
    (23, 18), (9, 5), (4, 4), (12, 7), (8, 15), (8, 6), (1, 7), (23, 17),
    (11, 10), (9, 22), (13, 17), (12, 9), (10, 10), (6, 5), (25, 15), (4, 7),
    (12, 3), (6, 11), (9, 10), (9, 11), (0, 1), (8, 13), (8, 13), (10, 8),
    (12, 17), (15, 9), (15, 13), (0, 0), (6, 4), (3, 5), (0, 0), (7, 4),
    (4, 6), (8, 8), (6, 7), (11, 14), (3, 0), (7, 11), (0, 3), (8, 10),
    (9, 12), (13, 12), (5, 4), (4, 8), (3, 3), (4, 5), (2, 0), (19, 15),
    (22, 8), (16, 3), (4, 3), (6, 5), (5, 4), (7, 5), (1, 6),
]


def realize_bidegree_sequence(out_deg, in_deg) -> np.ndarray:
    """Build a simple digraph adjacency with the given bi-degree sequence.

    Max-flow construction: source -> row-node i with capacity d_i^+,
    column-node j -> sink with capacity d_j^-, unit capacity on every
    (i, j) pair with i != j.  A saturating flow is a realization.
    """
    out_deg = np.asarray(out_deg, dtype=np.int64)
    in_deg = np.asarray(in_deg, dtype=np.int64)
    n = out_deg.shape[0]
    total = int(out_deg.sum())
    assert total == int(in_deg.sum())

    src, sink = 2 * n, 2 * n + 1
    rows, cols, caps = [], [], []
    for i in range(n):
        rows.append(src), cols.append(i), caps.append(int(out_deg[i]))
        rows.append(n + i), cols.append(sink), caps.append(int(in_deg[i]))
        for j in range(n):
            if i != j:
                rows.append(i), cols.append(n + j), caps.append(1)
    graph = csr_matrix((caps, (rows, cols)), shape=(2 * n + 2, 2 * n + 2))
    result = maximum_flow(graph, src, sink)
    assert result.flow_value == total, "bi-degree sequence is not realizable"
    flow = result.flow.toarray()
    return flow[:n, n : 2 * n] > 0


@pytest.fixture(scope="session")
def lawyer_graph() -> DirectedGraph:
    out_deg = [d for d, _ in LAWYER_BIDEGREES]
    in_deg = [d for _, d in LAWYER_BIDEGREES]
    return DirectedGraph(adjacency=realize_bidegree_sequence(out_deg, in_deg))


@pytest.fixture(scope="session")
def lawyer_edge_list(lawyer_graph, tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("data") / "lawyer_friendship.txt"
    path.write_text(to_edge_list_text(lawyer_graph), encoding="utf-8")
    return str(path)
