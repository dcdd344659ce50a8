import numpy as np
import pytest

from noreg import (
    Digraph,
    adjacency,
    laplacian,
    partition,
    partition_diagnostics,
    rooted_spanning_tree_exists,
    spectrum,
)
from noreg.errors import NonzeroLeaderRow
from noreg import mupal


@pytest.fixture
def mupal_graph():
    return Digraph(node_count=5, edges=mupal.NETWORK_EDGES)


def random_rooted_digraph(rng, n_nodes):
    """Random digraph with a spanning tree rooted at node 0 and the heads
    of leader edges relabeled to come first."""
    parents = [None] * n_nodes
    edges = []
    for i in range(1, n_nodes):
        parents[i] = int(rng.integers(0, i))
        edges.append((parents[i], i, float(rng.uniform(0.2, 2.0))))
    for _ in range(int(rng.integers(0, n_nodes))):
        t = int(rng.integers(1, n_nodes))
        h = int(rng.integers(1, n_nodes))
        if t != h and all((t, h) != (e[0], e[1]) for e in edges):
            edges.append((t, h, float(rng.uniform(0.2, 2.0))))
    informed = sorted({h for (t, h, _) in edges if t == 0})
    rest = [i for i in range(1, n_nodes) if i not in informed]
    mapping = {0: 0}
    for new, old in enumerate(informed + rest, start=1):
        mapping[old] = new
    edges = tuple((mapping[t], mapping[h], w) for (t, h, w) in edges)
    return Digraph(node_count=n_nodes, edges=edges), len(informed)


class TestAdjacency:
    def test_empty(self):
        assert np.array_equal(adjacency(Digraph(node_count=3)), np.zeros((3, 3)))

    def test_single_edge(self):
        a = adjacency(Digraph(node_count=2, edges=((0, 1, 2.0),)))
        expected = np.zeros((2, 2))
        expected[1, 0] = 2.0
        assert np.array_equal(a, expected)

    def test_consistent_with_reference_laplacian(self, mupal_graph):
        a = adjacency(mupal_graph)
        lap = mupal.LAPLACIAN_EXPECTED
        off = ~np.eye(5, dtype=bool)
        assert np.array_equal(a[off], -lap[off])


class TestLaplacian:
    def test_reference_network_exact(self, mupal_graph):
        assert np.array_equal(laplacian(mupal_graph), mupal.LAPLACIAN_EXPECTED)

    def test_no_edges(self):
        assert np.array_equal(laplacian(Digraph(node_count=4)), np.zeros((4, 4)))

    def test_row_sums_vanish(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            g, _ = random_rooted_digraph(rng, int(rng.integers(2, 8)))
            lap = laplacian(g)
            assert np.abs(lap.sum(axis=1)).max() < 1e-12


class TestPartition:
    def test_reference_follower_block(self, mupal_graph):
        part = partition(laplacian(mupal_graph), 1)
        expected = np.array([[2.0, 0.0, 0.0], [-2.0, 2.0, 0.0], [-0.7, -0.5, 1.2]])
        assert np.array_equal(part.L33, expected)
        assert part.L22.shape == (1, 1)
        assert np.array_equal(part.L32, np.array([[-2.0], [0.0], [0.0]]))

    def test_all_informed(self, mupal_graph):
        part = partition(laplacian(mupal_graph), 4)
        assert part.L33.shape == (0, 0)
        assert part.L22.shape == (4, 4)

    def test_none_informed(self):
        g = Digraph(node_count=3, edges=((1, 2, 1.0),))
        part = partition(laplacian(g), 0)
        assert part.L22.shape == (0, 0)
        assert part.L33.shape == (2, 2)

    def test_leader_in_edge_rejected(self):
        g = Digraph(node_count=2, edges=((1, 0, 1.0),))
        with pytest.raises(NonzeroLeaderRow):
            partition(laplacian(g), 0)


class TestReachability:
    def test_reference_network(self, mupal_graph):
        assert rooted_spanning_tree_exists(mupal_graph)

    def test_edgeless(self):
        assert not rooted_spanning_tree_exists(Digraph(node_count=3))

    def test_chain(self):
        edges = tuple((i, i + 1, 1.0) for i in range(5))
        assert rooted_spanning_tree_exists(Digraph(node_count=6, edges=edges))


class TestDiagnostics:
    def test_reference_network(self, mupal_graph):
        diag = partition_diagnostics(partition(laplacian(mupal_graph), 1), mupal_graph)
        assert diag.l33_nonsingular
        assert abs(diag.min_real_part - 1.2) < 1e-9
        assert diag.reachable_from_leader
        assert diag.consistent

    def test_edgeless(self):
        g = Digraph(node_count=3)
        diag = partition_diagnostics(partition(laplacian(g), 0), g)
        assert not diag.l33_nonsingular
        assert not diag.reachable_from_leader
        assert diag.consistent

    def test_random_rooted_trees_agree(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            g, l = random_rooted_digraph(rng, 6)
            diag = partition_diagnostics(partition(laplacian(g), l), g)
            assert diag.l33_nonsingular and diag.reachable_from_leader

    def test_follower_block_spectrum_in_right_half_plane(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            g, l = random_rooted_digraph(rng, int(rng.integers(2, 9)))
            l33 = partition(laplacian(g), l).L33
            if l33.shape[0]:
                assert spectrum(l33).real.min() > 0


class TestValidation:
    def test_self_loop(self):
        with pytest.raises(ValueError):
            Digraph(node_count=2, edges=((1, 1, 1.0),))

    def test_nonpositive_weight(self):
        with pytest.raises(ValueError):
            Digraph(node_count=2, edges=((0, 1, 0.0),))

    def test_duplicate_edge(self):
        with pytest.raises(ValueError):
            Digraph(node_count=2, edges=((0, 1, 1.0), (0, 1, 2.0)))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            Digraph(node_count=2, edges=((0, 2, 1.0),))
