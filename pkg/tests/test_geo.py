import datetime as dt
import itertools

import numpy as np
import pytest

from epicast import geo
from epicast.series import TimeSeries

from oracles import best_partition_bruteforce, modularity_direct

D0 = dt.date(2020, 3, 1)


def clique_edges(members, weight=1.0):
    return [(i, j, weight) for i, j in itertools.combinations(members, 2)]


def graph_from(edges):
    g = geo.CommuteGraph()
    for i, j, w in edges:
        g.add_weight(i, j, w)
    return g


def random_edges(rng, n, p=0.4):
    edges = []
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < p:
            edges.append((i, j, float(rng.integers(1, 10))))
    if rng.random() < 0.3:
        edges.append((0, 0, float(rng.integers(1, 5))))
    return edges


class TestBuildGraph:
    def test_symmetrization_sums_both_directions(self):
        g = geo.build_graph([("a", "b", 50.0), ("b", "a", 30.0)])
        assert g.adj["a"]["b"] == 80.0
        assert g.adj["b"]["a"] == 80.0

    def test_unsymmetrized_averages_mirror_rows(self):
        g = geo.build_graph([("a", "b", 50.0), ("b", "a", 30.0)],
                            symmetrize=False)
        assert g.adj["a"]["b"] == 40.0

    def test_state_constraint_drops_cross_state_edges_keeps_nodes(self):
        g = geo.build_graph([("a", "b", 50.0)],
                            state_constraint={"a": "IL", "b": "WI"})
        assert set(g.nodes) == {"a", "b"}
        assert g.adj["a"] == {}

    def test_state_constraint_keeps_same_state_edges(self):
        g = geo.build_graph([("a", "b", 50.0)],
                            state_constraint={"a": "IL", "b": "IL"})
        assert g.adj["a"]["b"] == 50.0

    def test_empty_input_empty_graph(self):
        assert geo.build_graph([]).nodes == []

    def test_self_loop_counts_twice_in_strength(self):
        g = graph_from([("a", "a", 3.0), ("a", "b", 1.0)])
        assert g.strength("a") == 1.0 + 2 * 3.0
        assert g.total_weight() == 4.0


class TestModularityAgainstOracle:
    def test_matches_direct_formula_on_random_graphs(self):
        rng = np.random.default_rng(1)
        for trial in range(30):
            n = int(rng.integers(3, 9))
            edges = random_edges(rng, n)
            if not edges:
                continue
            labels = [int(rng.integers(0, 3)) for _ in range(n)]
            g = graph_from([(f"n{i}", f"n{j}", w) for i, j, w in edges])
            for i in range(n):
                g.add_node(f"n{i}")
            assignment = {f"n{i}": labels[i] for i in range(n)}
            ours = geo.modularity(g, assignment)
            ref = modularity_direct(n, edges, labels)
            assert ours == pytest.approx(ref, abs=1e-12)

    def test_matches_networkx(self):
        nx = pytest.importorskip("networkx")
        from networkx.algorithms.community import modularity as nx_modularity
        rng = np.random.default_rng(2)
        for trial in range(20):
            n = int(rng.integers(3, 10))
            edges = random_edges(rng, n)
            if not edges:
                continue
            gx = nx.Graph()
            gx.add_nodes_from(range(n))
            for i, j, w in edges:
                gx.add_edge(i, j, weight=w)
            labels = [int(rng.integers(0, 2)) for _ in range(n)]
            groups = [{i for i in range(n) if labels[i] == c} for c in (0, 1)]
            groups = [grp for grp in groups if grp]
            g = graph_from([(f"n{i}", f"n{j}", w) for i, j, w in edges])
            for i in range(n):
                g.add_node(f"n{i}")
            assignment = {f"n{i}": labels[i] for i in range(n)}
            assert geo.modularity(g, assignment) == pytest.approx(
                nx_modularity(gx, groups, weight="weight"), abs=1e-12)


class TestLouvain:
    def test_two_cliques_resolved_exactly(self):
        """Two 4-cliques and a weak bridge: the optimum over every one of the
        4,140 partitions is the two cliques, and the implementation finds it."""
        names = [f"n{i}" for i in range(8)]
        idx_edges = (clique_edges(range(4), 5.0) + clique_edges(range(4, 8), 5.0)
                     + [(0, 4, 1.0)])
        edges = [(names[i], names[j], w) for i, j, w in idx_edges]
        clustering = geo.louvain(graph_from(edges))
        got = {frozenset(m) for m, _ in clustering.clusters.values()}
        assert got == {frozenset(names[:4]), frozenset(names[4:])}

        best_q, best_parts = best_partition_bruteforce(8, idx_edges)
        assert best_parts == {frozenset(range(4)), frozenset(range(4, 8))}
        assignment = clustering.assignment
        labels = [assignment[names[i]] for i in range(8)]
        assert modularity_direct(8, idx_edges, labels) == pytest.approx(
            best_q, abs=1e-12)

    def test_two_five_cliques_with_unit_bridge(self):
        names = [f"n{i}" for i in range(10)]
        idx_edges = (clique_edges(range(5)) + clique_edges(range(5, 10))
                     + [(0, 5, 1.0)])
        edges = [(names[i], names[j], w) for i, j, w in idx_edges]
        clustering = geo.louvain(graph_from(edges))
        got = {frozenset(m) for m, _ in clustering.clusters.values()}
        assert got == {frozenset(names[:5]), frozenset(names[5:])}

    def test_disconnected_components_stay_apart(self):
        edges = [("a", "b", 2.0), ("c", "d", 2.0)]
        clustering = geo.louvain(graph_from(edges))
        assert clustering.assignment["a"] == clustering.assignment["b"]
        assert clustering.assignment["c"] == clustering.assignment["d"]
        assert clustering.assignment["a"] != clustering.assignment["c"]

    def test_single_node(self):
        g = geo.CommuteGraph()
        g.add_node("only")
        clustering = geo.louvain(g)
        assert clustering.assignment == {"only": "c0"}

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            geo.louvain(geo.CommuteGraph())

    def test_never_below_singletons_and_never_above_bruteforce(self):
        rng = np.random.default_rng(7)
        for trial in range(25):
            n = int(rng.integers(3, 8))
            edges = random_edges(rng, n, p=0.5)
            if not edges:
                continue
            named = [(f"n{i}", f"n{j}", w) for i, j, w in edges]
            g = graph_from(named)
            for i in range(n):
                g.add_node(f"n{i}")
            clustering = geo.louvain(g)
            labels = [clustering.assignment[f"n{i}"] for i in range(n)]
            q = modularity_direct(n, edges, labels)
            q_singleton = modularity_direct(n, edges, list(range(n)))
            q_best, _ = best_partition_bruteforce(n, edges)
            assert q >= q_singleton - 1e-12
            assert q <= q_best + 1e-12

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        edges = [(f"n{i}", f"n{j}", w)
                 for i, j, w in random_edges(rng, 12, p=0.3)]
        a = geo.louvain(graph_from(edges))
        b = geo.louvain(graph_from(edges))
        assert a.assignment == b.assignment
        c = geo.louvain(graph_from(edges), seed=99)   # seed is inert
        assert a.assignment == c.assignment

    def test_high_resolution_splits_finer(self):
        names = [f"n{i}" for i in range(8)]
        idx_edges = (clique_edges(range(4), 5.0) + clique_edges(range(4, 8), 5.0)
                     + [(0, 4, 4.0), (1, 5, 4.0)])
        edges = [(names[i], names[j], w) for i, j, w in idx_edges]
        coarse = geo.louvain(graph_from(edges), resolution=0.05)
        fine = geo.louvain(graph_from(edges), resolution=1.0)
        assert len(coarse.clusters) <= len(fine.clusters)

    def test_populations_summed_and_labels_ordered(self):
        edges = [("b1", "b2", 5.0), ("a1", "a2", 5.0)]
        pops = {"a1": 10.0, "a2": 20.0, "b1": 1.0, "b2": 2.0}
        clustering = geo.louvain(graph_from(edges), populations=pops)
        # labels follow the smallest member id, so the a-pair is c0
        assert clustering.members("c0") == ["a1", "a2"]
        assert clustering.population("c0") == 30.0
        assert clustering.population("c1") == 3.0

    def test_json_round_trip(self):
        edges = [("a", "b", 2.0), ("c", "d", 2.0)]
        clustering = geo.louvain(graph_from(edges),
                                 populations={"a": 1, "b": 2, "c": 3, "d": 4})
        back = geo.Clustering.from_json(clustering.to_json())
        assert back.assignment == clustering.assignment
        assert back.clusters == clustering.clusters


def test_singleton_clustering():
    clustering = geo.singleton_clustering(["b", "a"], {"a": 5.0})
    assert clustering.assignment == {"a": "c0", "b": "c1"}
    assert clustering.population("c0") == 5.0
    assert clustering.population("c1") == 0.0


class TestAggregate:
    def two_member_clustering(self):
        return geo.Clustering(assignment={"a": "c0", "b": "c0"},
                              clusters={"c0": (["a", "b"], 0.0)})

    def test_elementwise_sum(self):
        series = {"a": TimeSeries("a", D0, [1, 2]),
                  "b": TimeSeries("b", D0, [3, 4])}
        out = geo.aggregate(self.two_member_clustering(), series)
        np.testing.assert_array_equal(out.series["c0"].values, [4, 6])
        assert out.unassigned == []

    def test_ragged_start_daily_contributes_zero(self):
        series = {"a": TimeSeries("a", D0 + dt.timedelta(days=1), [10.0]),
                  "b": TimeSeries("b", D0, [3.0, 4.0])}
        out = geo.aggregate(self.two_member_clustering(), series, kind="daily")
        np.testing.assert_array_equal(out.series["c0"].values, [3, 14])

    def test_cumulative_member_carries_last_value(self):
        series = {"a": TimeSeries("a", D0, [5.0]),
                  "b": TimeSeries("b", D0, [1.0, 2.0, 3.0])}
        out = geo.aggregate(self.two_member_clustering(), series)
        np.testing.assert_array_equal(out.series["c0"].values, [6, 7, 8])

    def test_monotone_members_give_monotone_aggregate(self):
        rng = np.random.default_rng(3)
        series = {}
        for name, offset in (("a", 0), ("b", 3)):
            vals = np.cumsum(rng.integers(0, 5, size=20)).astype(float)
            series[name] = TimeSeries(name, D0 + dt.timedelta(days=offset), vals)
        out = geo.aggregate(self.two_member_clustering(), series)
        assert np.all(np.diff(out.series["c0"].values) >= 0)

    def test_unassigned_counties_reported(self):
        series = {"a": TimeSeries("a", D0, [1.0]),
                  "zz": TimeSeries("zz", D0, [1.0])}
        out = geo.aggregate(self.two_member_clustering(), series)
        assert out.unassigned == ["zz"]
        assert "zz" not in out.series

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            geo.aggregate(self.two_member_clustering(), {}, kind="mean")

    def test_mobility_population_weighted_mean(self):
        series = {"a": TimeSeries("a", D0, [100.0, 100.0]),
                  "b": TimeSeries("b", D0, [50.0, 60.0])}
        pops = {"a": 300.0, "b": 100.0}
        out = geo.aggregate_mobility(self.two_member_clustering(), series, pops)
        np.testing.assert_allclose(out.series["c0"].values, [87.5, 90.0])

    def test_mobility_missing_member_drops_from_mean(self):
        series = {"a": TimeSeries("a", D0, [100.0]),
                  "b": TimeSeries("b", D0, [50.0, 60.0])}
        pops = {"a": 300.0, "b": 100.0}
        out = geo.aggregate_mobility(self.two_member_clustering(), series, pops)
        np.testing.assert_allclose(out.series["c0"].values, [87.5, 60.0])
