"""County clustering on commute flows and series aggregation.

Counties are grouped into self-contained geo-units by maximizing weighted
modularity on the symmetrized commute graph with the classic two-phase
local-move / coarsen procedure.  The implementation here is deliberately
deterministic: nodes are scanned in ascending id order and the first
positive-gain move wins, so repeated runs on identical input produce
identical partitions regardless of seed or thread scheduling.

Self-loop weights (intra-county commuting) count toward node strength,
as in standard weighted modularity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .series import TimeSeries

_GAIN_EPS = 1e-12


@dataclass
class CommuteGraph:
    """Undirected weighted graph over county ids.

    ``adj[i][j]`` holds the symmetric edge weight; self-loops are stored once
    under ``adj[i][i]`` and contribute twice to node strength.
    """

    adj: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def nodes(self) -> list[str]:
        return sorted(self.adj)

    def add_node(self, node: str) -> None:
        self.adj.setdefault(node, {})

    def add_weight(self, i: str, j: str, w: float) -> None:
        self.add_node(i)
        self.add_node(j)
        self.adj[i][j] = self.adj[i].get(j, 0.0) + w
        if i != j:
            self.adj[j][i] = self.adj[j].get(i, 0.0) + w

    def strength(self, i: str) -> float:
        # self-loops count twice, matching the modularity convention
        return sum(w for j, w in self.adj[i].items() if j != i) + 2.0 * self.adj[i].get(i, 0.0)

    def total_weight(self) -> float:
        """Sum of edge weights m (each undirected edge once, self-loops once)."""
        return sum(self.strength(i) for i in self.adj) / 2.0


@dataclass
class Clustering:
    """A partition of counties into clusters, with per-cluster population."""

    assignment: dict[str, str]
    clusters: dict[str, tuple[list[str], float]]

    def members(self, cluster_id: str) -> list[str]:
        return self.clusters[cluster_id][0]

    def population(self, cluster_id: str) -> float:
        return self.clusters[cluster_id][1]

    def to_json(self) -> dict:
        return {
            "clusters": [
                {"id": cid, "counties": members, "population": pop}
                for cid, (members, pop) in sorted(self.clusters.items())
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Clustering":
        assignment, clusters = {}, {}
        for entry in obj["clusters"]:
            clusters[entry["id"]] = (list(entry["counties"]), float(entry["population"]))
            for county in entry["counties"]:
                assignment[county] = entry["id"]
        return cls(assignment, clusters)


def build_graph(commute_rows, symmetrize: bool = True,
                state_constraint: dict[str, str] | None = None) -> CommuteGraph:
    """Build the undirected commute graph from directed (home, work, workers) rows.

    With ``symmetrize`` the return journey is added: weight(i,j) =
    flow(i->j) + flow(j->i).  Without it the input is treated as already
    symmetric and mirror rows are averaged.  Cross-state edges are dropped
    when a county->state constraint map is supplied (nodes are kept).
    """
    graph = CommuteGraph()
    pair_flows: dict[tuple[str, str], list[float]] = {}
    for home, work, workers in commute_rows:
        graph.add_node(home)
        graph.add_node(work)
        if state_constraint is not None and home != work:
            if state_constraint.get(home) != state_constraint.get(work):
                continue
        key = (min(home, work), max(home, work))
        pair_flows.setdefault(key, []).append(float(workers))
    for (i, j), flows in pair_flows.items():
        weight = sum(flows) if symmetrize else sum(flows) / len(flows)
        if weight > 0:
            graph.add_weight(i, j, weight)
    return graph


def modularity(graph: CommuteGraph, assignment: dict[str, str],
               resolution: float = 1.0) -> float:
    """Weighted modularity of a partition: sum_c [L_c/m - gamma*(k_c/2m)^2]."""
    m = graph.total_weight()
    if m <= 0:
        return 0.0
    internal: dict[str, float] = {}
    strength: dict[str, float] = {}
    for i in graph.adj:
        ci = assignment[i]
        strength[ci] = strength.get(ci, 0.0) + graph.strength(i)
        for j, w in graph.adj[i].items():
            if assignment.get(j) == ci:
                if i == j:
                    internal[ci] = internal.get(ci, 0.0) + w
                elif i < j:
                    internal[ci] = internal.get(ci, 0.0) + w
    q = 0.0
    for c in strength:
        q += internal.get(c, 0.0) / m - resolution * (strength[c] / (2.0 * m)) ** 2
    return q


def _local_moves(nodes, neighbors, strength, self_w, community, resolution, m):
    """One-level local move phase; mutates ``community`` in place.

    Nodes are visited in ascending order and moved to the first neighboring
    community with positive modularity gain.
    """
    sigma_tot = {}
    for n in nodes:
        c = community[n]
        sigma_tot[c] = sigma_tot.get(c, 0.0) + strength[n]
    moved_any = False
    improved = True
    while improved:
        improved = False
        for n in nodes:
            c_old = community[n]
            k_n = strength[n]
            # weight from n to each neighboring community (self-loops excluded)
            links: dict[object, float] = {}
            for nb, w in neighbors[n].items():
                if nb == n:
                    continue
                links[community[nb]] = links.get(community[nb], 0.0) + w
            sigma_tot[c_old] -= k_n
            base = links.get(c_old, 0.0) / m - resolution * sigma_tot[c_old] * k_n / (2.0 * m * m)
            target = None
            for cand in sorted(links, key=str):
                if cand == c_old:
                    continue
                gain = links[cand] / m - resolution * sigma_tot.get(cand, 0.0) * k_n / (2.0 * m * m)
                if gain - base > _GAIN_EPS:
                    target = cand
                    break
            if target is None:
                sigma_tot[c_old] += k_n
            else:
                community[n] = target
                sigma_tot[target] = sigma_tot.get(target, 0.0) + k_n
                improved = True
                moved_any = True
    return moved_any


def louvain(graph: CommuteGraph, resolution: float = 1.0, seed: int = 0,
            populations: dict[str, float] | None = None) -> Clustering:
    """Two-phase modularity clustering of the commute graph.

    ``seed`` is accepted for interface stability but has no effect: the node
    scan order is fixed (ascending id), so the output is fully determined by
    the graph and resolution.
    """
    del seed
    if not graph.adj:
        raise ValueError("graph has no nodes")
    m = graph.total_weight()
    nodes: list = list(graph.nodes)
    neighbors: dict = {n: dict(graph.adj[n]) for n in nodes}
    strength = {n: graph.strength(n) for n in nodes}
    self_w = {n: graph.adj[n].get(n, 0.0) for n in nodes}
    # membership maps original counties to current-level supernodes
    membership: dict[str, object] = {n: n for n in graph.nodes}
    community = {n: n for n in nodes}

    if m > 0:
        while True:
            moved = _local_moves(nodes, neighbors, strength, self_w, community, resolution, m)
            if not moved:
                break
            # coarsen: one supernode per community
            groups: dict[object, list] = {}
            for n in nodes:
                groups.setdefault(community[n], []).append(n)
            new_nodes = sorted(groups, key=str)
            new_neighbors: dict = {c: {} for c in new_nodes}
            new_strength = {c: 0.0 for c in new_nodes}
            new_self = {c: 0.0 for c in new_nodes}
            for c, members in groups.items():
                for n in members:
                    new_strength[c] += strength[n]
                    new_self[c] += self_w[n]
                    for nb, w in neighbors[n].items():
                        if nb == n:
                            continue
                        cb = community[nb]
                        if cb == c:
                            new_self[c] += w / 2.0  # each internal edge seen twice
                        else:
                            new_neighbors[c][cb] = new_neighbors[c].get(cb, 0.0) + w
            for c in new_nodes:
                if new_self[c] > 0:
                    new_neighbors[c][c] = new_self[c]
            for county, node in membership.items():
                membership[county] = community[node]
            nodes, neighbors, strength, self_w = (
                new_nodes, new_neighbors, new_strength, new_self)
            community = {n: n for n in nodes}

    # stable labels: clusters ordered by their smallest member id
    groups2: dict[object, list[str]] = {}
    for county, node in membership.items():
        groups2.setdefault(node, []).append(county)
    ordered = sorted(groups2.values(), key=lambda ms: min(ms))
    assignment: dict[str, str] = {}
    clusters: dict[str, tuple[list[str], float]] = {}
    for idx, members in enumerate(ordered):
        cid = f"c{idx}"
        members = sorted(members)
        pop = sum(populations.get(c, 0.0) for c in members) if populations else 0.0
        clusters[cid] = (members, pop)
        for county in members:
            assignment[county] = cid
    return Clustering(assignment, clusters)


def singleton_clustering(counties, populations: dict[str, float] | None = None) -> Clustering:
    """One cluster per county; used when no commute data is available."""
    assignment, clusters = {}, {}
    for idx, county in enumerate(sorted(counties)):
        cid = f"c{idx}"
        assignment[county] = cid
        pop = populations.get(county, 0.0) if populations else 0.0
        clusters[cid] = ([county], pop)
    return Clustering(assignment, clusters)


@dataclass
class AggregationResult:
    series: dict[str, TimeSeries]
    unassigned: list[str]


def aggregate(clustering: Clustering, county_series: dict[str, TimeSeries],
              kind: str = "cumulative") -> AggregationResult:
    """Sum member-county series to cluster level.

    Dates are unioned across members.  A member with no value on a date
    contributes its last known value (``kind="cumulative"``) or 0
    (``kind="daily"``); either way a member contributes nothing before its
    first observation.  Counties without a cluster assignment are reported
    and excluded.
    """
    if kind not in ("cumulative", "daily"):
        raise ValueError(f"unknown aggregation kind {kind!r}")
    unassigned = sorted(c for c in county_series if c not in clustering.assignment)
    out: dict[str, TimeSeries] = {}
    for cid, (members, _pop) in sorted(clustering.clusters.items()):
        present = [county_series[c] for c in members if c in county_series]
        if not present:
            continue
        start = min(ts.start for ts in present)
        end = max(ts.end for ts in present)
        n = (end - start).days + 1
        total = np.zeros(n)
        for ts in present:
            off = (ts.start - start).days
            total[off:off + len(ts)] += ts.values
            if kind == "cumulative" and off + len(ts) < n:
                total[off + len(ts):] += ts.values[-1]
        out[cid] = TimeSeries(cid, start, total)
    return AggregationResult(out, unassigned)


def aggregate_mobility(clustering: Clustering, county_series: dict[str, TimeSeries],
                       populations: dict[str, float]) -> AggregationResult:
    """Population-weighted mean of member mobility indices per date.

    A sum is wrong for an index, so members missing on a date simply drop out
    of the weighted mean for that date.
    """
    unassigned = sorted(c for c in county_series if c not in clustering.assignment)
    out: dict[str, TimeSeries] = {}
    for cid, (members, _pop) in sorted(clustering.clusters.items()):
        present = [county_series[c] for c in members if c in county_series]
        if not present:
            continue
        start = min(ts.start for ts in present)
        end = max(ts.end for ts in present)
        n = (end - start).days + 1
        weighted = np.zeros(n)
        weight = np.zeros(n)
        for ts in present:
            off = (ts.start - start).days
            w = populations.get(ts.geo_id, 1.0)
            weighted[off:off + len(ts)] += w * ts.values
            weight[off:off + len(ts)] += w
        with np.errstate(invalid="ignore"):
            vals = np.where(weight > 0, weighted / np.maximum(weight, 1e-300), 0.0)
        out[cid] = TimeSeries(cid, start, vals)
    return AggregationResult(out, unassigned)
