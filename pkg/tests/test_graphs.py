import numpy as np
import pytest

from tscausal.graphs import (Mark, SepSetStore, TimeSeriesGraph, VarLag,
                             new_full_graph)

from oracles import scan_collider_triples


def test_full_graph_counts():
    # N^2 * tau_max lagged slots plus N(N-1)/2 contemporaneous pairs
    assert new_full_graph(2, 1).n_links() == 5
    assert new_full_graph(1, 2).n_links() == 2


def test_full_graph_no_contemporaneous_self_links():
    g = new_full_graph(1, 2)
    assert g.mark(0, 0, 0) == Mark.ABSENT
    assert g.mark(0, 0, 1) == Mark.DIRECTED


def test_full_graph_from_lagged_adjacencies():
    g = new_full_graph(3, 1, lagged_adjacencies={2: [(0, 1)]})
    assert g.mark(0, 2, 1) == Mark.DIRECTED
    lagged = [(i, j, tau) for i in range(3) for j in range(3)
              for tau in (1,) if g.mark(i, j, tau) != Mark.ABSENT]
    assert lagged == [(0, 2, 1)]
    contemp = {(i, j) for i in range(3) for j in range(3)
               if i < j and g.mark(i, j, 0) == Mark.UNDIRECTED}
    assert contemp == {(0, 1), (0, 2), (1, 2)}


def test_full_graph_rejects_bad_lagged_adjacency():
    with pytest.raises(ValueError):
        new_full_graph(3, 1, lagged_adjacencies={0: [(1, 2)]})
    with pytest.raises(ValueError):
        new_full_graph(3, 1, lagged_adjacencies={0: [(1, 0)]})


def test_contemporaneous_adjacencies():
    g = new_full_graph(3, 1)
    assert g.contemporaneous_adjacencies(0) == {VarLag(1, 0), VarLag(2, 0)}
    g.set_mark(1, 0, 0, Mark.ABSENT)
    assert g.contemporaneous_adjacencies(0) == {VarLag(2, 0)}
    empty = TimeSeriesGraph(3, 1)
    assert empty.contemporaneous_adjacencies(0) == set()


def test_adjacencies_all_lags():
    g = new_full_graph(2, 2)
    adj = g.adjacencies(0, all_lags=True)
    assert VarLag(1, 0) in adj
    assert VarLag(0, 1) in adj and VarLag(1, 2) in adj
    assert VarLag(0, 0) not in adj


def test_mirror_consistency_under_random_ops():
    rng = np.random.default_rng(0)
    g = TimeSeriesGraph(4, 2)
    contemp_marks = [Mark.ABSENT, Mark.DIRECTED, Mark.REVERSED,
                     Mark.UNDIRECTED, Mark.CONFLICT]
    for _ in range(500):
        i, j = rng.choice(4, size=2, replace=False)
        g.set_mark(int(i), int(j), 0, contemp_marks[rng.integers(5)])
        for a in range(4):
            for b in range(a + 1, 4):
                assert g.mark(a, b, 0) == Mark.MIRROR[g.mark(b, a, 0)]


def test_lagged_marks_restricted():
    g = TimeSeriesGraph(2, 1)
    g.set_mark(0, 1, 1, Mark.DIRECTED)
    for bad in (Mark.UNDIRECTED, Mark.CONFLICT, Mark.REVERSED):
        with pytest.raises(ValueError):
            g.set_mark(0, 1, 1, bad)
    with pytest.raises(ValueError):
        g.set_mark(0, 0, 0, Mark.UNDIRECTED)


def _random_skeleton(rng, n, tau_max):
    g = TimeSeriesGraph(n, tau_max)
    for i in range(n):
        for j in range(n):
            for tau in range(1, tau_max + 1):
                if rng.random() < 0.3:
                    g.set_mark(i, j, tau, Mark.DIRECTED)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.4:
                g.set_mark(i, j, 0, Mark.UNDIRECTED)
    return g


def test_collider_triples_match_brute_force_scan():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        tau_max = int(rng.integers(0, 3))
        g = _random_skeleton(rng, n, tau_max)
        got = [((x.var, x.lag), (k.var, k.lag), (y.var, y.lag))
               for (x, k, y) in g.enumerate_triples("collider")]
        assert got == scan_collider_triples(g)


def test_triple_examples():
    # directed lagged link into an undirected contemporaneous pair
    g = TimeSeriesGraph(3, 1)
    g.set_mark(0, 1, 1, Mark.DIRECTED)
    g.set_mark(1, 2, 0, Mark.UNDIRECTED)
    assert g.enumerate_triples("r1") == [
        (VarLag(0, 1), VarLag(1, 0), VarLag(2, 0))]
    assert g.enumerate_triples("collider") == [
        (VarLag(0, 1), VarLag(1, 0), VarLag(2, 0))]

    # pure contemporaneous unshielded triple, listed once
    g2 = TimeSeriesGraph(3, 0)
    g2.set_mark(0, 1, 0, Mark.UNDIRECTED)
    g2.set_mark(1, 2, 0, Mark.UNDIRECTED)
    assert g2.enumerate_triples("collider") == [
        (VarLag(0, 0), VarLag(1, 0), VarLag(2, 0))]

    # shielded triple yields nothing
    g2.set_mark(0, 2, 0, Mark.UNDIRECTED)
    assert g2.enumerate_triples("collider") == []


def test_triples_r2_r3():
    g = TimeSeriesGraph(3, 0)
    g.set_mark(0, 1, 0, Mark.DIRECTED)
    g.set_mark(1, 2, 0, Mark.DIRECTED)
    g.set_mark(0, 2, 0, Mark.UNDIRECTED)
    assert g.enumerate_triples("r2") == [
        (VarLag(0, 0), VarLag(1, 0), VarLag(2, 0))]

    g3 = TimeSeriesGraph(4, 0)
    g3.set_mark(0, 1, 0, Mark.UNDIRECTED)
    g3.set_mark(0, 2, 0, Mark.UNDIRECTED)
    g3.set_mark(0, 3, 0, Mark.UNDIRECTED)
    g3.set_mark(1, 3, 0, Mark.DIRECTED)
    g3.set_mark(2, 3, 0, Mark.DIRECTED)
    assert g3.enumerate_triples("r3") == [
        (VarLag(0, 0), VarLag(1, 0), VarLag(2, 0), VarLag(3, 0))]


def test_triple_output_independent_of_insertion_order():
    edits = [(0, 1, 1, Mark.DIRECTED), (1, 2, 0, Mark.UNDIRECTED),
             (0, 2, 0, Mark.UNDIRECTED), (2, 1, 1, Mark.DIRECTED)]
    graphs = []
    for order in (edits, edits[::-1]):
        g = TimeSeriesGraph(3, 1)
        for (i, j, tau, mark) in order:
            g.set_mark(i, j, tau, mark)
        graphs.append(g)
    for kind in ("collider", "r1", "r2", "r3"):
        assert graphs[0].enumerate_triples(kind) == \
            graphs[1].enumerate_triples(kind)


def test_sepset_store_normalization():
    store = SepSetStore()
    store.store((0, 0), 1, [(2, 0)])
    assert store.get((1, 0), 0) == frozenset({VarLag(2, 0)})
    store.store((0, 2), 1, [])
    assert ((0, 2), 1) in store
    assert store.get((0, 1), 1) == frozenset()
    with pytest.raises(ValueError):
        store.store((0, 1), 1, [(0, 1)])


def test_serialization_round_trip():
    g = new_full_graph(3, 2)
    g.set_mark(0, 1, 0, Mark.DIRECTED)
    g.set_mark(1, 2, 0, Mark.CONFLICT)
    g.ambiguous_triples.add((VarLag(0, 1), VarLag(1, 0), VarLag(2, 0)))
    back = TimeSeriesGraph.from_dict(g.to_dict())
    assert back == g
    assert back.conflicts == {(1, 2)}


def test_permute_round_trip_and_conflicts():
    rng = np.random.default_rng(3)
    g = _random_skeleton(rng, 4, 2)
    g.set_mark(0, 1, 0, Mark.CONFLICT)
    perm = [2, 0, 3, 1]
    inverse = [perm.index(v) for v in range(4)]
    assert g.permute_variables(perm).permute_variables(inverse) == g


def test_contemporaneous_cycle_detection():
    g = TimeSeriesGraph(3, 0)
    g.set_mark(0, 1, 0, Mark.DIRECTED)
    g.set_mark(1, 2, 0, Mark.DIRECTED)
    assert not g.has_contemporaneous_cycle()
    g.set_mark(2, 0, 0, Mark.DIRECTED)
    assert g.has_contemporaneous_cycle()


def test_expanded_pads_with_absent():
    g = new_full_graph(2, 1)
    wide = g.expanded(3)
    assert wide.tau_max == 3
    assert wide.mark(0, 1, 1) == Mark.DIRECTED
    assert wide.mark(0, 1, 3) == Mark.ABSENT
    with pytest.raises(ValueError):
        wide.expanded(1)
