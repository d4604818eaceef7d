"""Trust-network analysis: communities, centrality, leaders, trust propagation.

Community detection runs on a symmetrized view of the directed trust graph
(an undirected edge wherever at least one direction exists, weighted by the
larger of the two values).  Centrality and propagation respect the original
edge directions.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

# Gains this close are treated as ties so float noise cannot flip a move.
_GAIN_EPS = 1e-12


def directed_adjacency(graph):
    """CSR matrix of the directed trust edges, A[u, v] = t_uv."""
    rows, cols, vals = [], [], []
    for u, v, t in graph.edges():
        rows.append(u)
        cols.append(v)
        vals.append(t)
    n = graph.num_users
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def symmetrized_adjacency(graph):
    """Undirected CSR view: weight max(t_uv, t_vu), both triangles filled."""
    a = directed_adjacency(graph)
    return a.maximum(a.T).tocsr()


def modularity(adjacency, labels):
    """Newman modularity of a labelling over a symmetric weighted adjacency.

    Self-loop entries are taken at face value (matrix convention: a collapsed
    community's internal weight w appears as A_ii = 2w).  A graph with no
    edges has modularity zero by definition.
    """
    adjacency = sparse.csr_matrix(adjacency)
    labels = np.asarray(labels)
    two_w = adjacency.sum()
    if two_w == 0:
        return 0.0
    degrees = np.asarray(adjacency.sum(axis=1)).ravel()
    coo = adjacency.tocoo()
    internal = coo.data[labels[coo.row] == labels[coo.col]].sum()
    totals = np.bincount(labels, weights=degrees)
    return float(internal / two_w - ((totals / two_w) ** 2).sum())


@dataclass
class CommunityAssignment:
    """Result of community detection: a label per user plus the achieved score."""

    labels: np.ndarray
    num_communities: int
    modularity: float

    def members(self, community):
        return np.flatnonzero(self.labels == community)

    def sizes(self):
        return np.bincount(self.labels, minlength=self.num_communities)


def louvain(graph, seed=0):
    """Two-phase greedy modularity maximization on the symmetrized trust graph.

    Local moves visit nodes in a seeded shuffled order; a node moves only for
    a strictly positive gain (beyond a tiny epsilon), preferring its current
    community and then the smallest community label on ties.  After a pass
    with no moves the graph is aggregated and the procedure repeats, so the
    result is deterministic for a given graph and seed.
    """
    adjacency = symmetrized_adjacency(graph)
    n = graph.num_users
    labels = np.arange(n)
    if adjacency.nnz == 0:
        return CommunityAssignment(labels, n, 0.0)

    rng = np.random.default_rng(seed)
    level_adj = adjacency
    while True:
        level_labels, moved = _one_level(level_adj, rng)
        level_labels = _relabel(level_labels)
        labels = level_labels[labels]
        if not moved:
            break
        level_adj = _aggregate(level_adj, level_labels)
    labels = _relabel(labels)
    num = int(labels.max()) + 1
    return CommunityAssignment(labels, num, modularity(adjacency, labels))


def _relabel(labels):
    """Map labels to 0..k-1 in order of first occurrence."""
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    lookup = np.empty(labels.max() + 1, dtype=np.int64)
    lookup[order] = np.arange(len(order))
    return lookup[labels]


def _one_level(adjacency, rng):
    """Repeated single-node moves until none improves modularity."""
    n = adjacency.shape[0]
    indptr, indices, data = adjacency.indptr, adjacency.indices, adjacency.data
    degrees = np.asarray(adjacency.sum(axis=1)).ravel()
    two_w = degrees.sum()
    comm = np.arange(n)
    tot = degrees.copy()
    moved_any = False

    improved = True
    while improved:
        improved = False
        for v in rng.permutation(n):
            kv = degrees[v]
            home = comm[v]
            # Weight from v to each neighboring community, self-loop excluded.
            link = {}
            for e in range(indptr[v], indptr[v + 1]):
                u = indices[e]
                if u != v:
                    c = comm[u]
                    link[c] = link.get(c, 0.0) + data[e]
            tot[home] -= kv
            best_c = home
            best_gain = link.get(home, 0.0) - tot[home] * kv / two_w
            for c, kvc in sorted(link.items()):
                if c == home:
                    continue
                gain = kvc - tot[c] * kv / two_w
                if gain > best_gain + _GAIN_EPS or (
                    abs(gain - best_gain) <= _GAIN_EPS and best_c != home and c < best_c
                ):
                    best_gain = gain
                    best_c = c
            tot[best_c] += kv
            if best_c != home:
                comm[v] = best_c
                improved = True
                moved_any = True
    return comm, moved_any


def _aggregate(adjacency, labels):
    """Collapse communities into super-nodes, keeping the matrix convention.

    Each stored (i, j) entry lands in (c_i, c_j), so an internal undirected
    edge contributes its weight twice to the new diagonal.
    """
    coo = adjacency.tocoo()
    k = int(labels.max()) + 1
    agg = sparse.csr_matrix((coo.data, (labels[coo.row], labels[coo.col])), shape=(k, k))
    agg.sum_duplicates()
    return agg


@dataclass
class CentralityScores:
    """Per-user importance scores from one method; scores sum to one."""

    scores: np.ndarray
    method: str


def pagerank(adjacency, damping=0.85, tol=1e-10, max_iter=1000):
    """Power iteration PageRank on a directed weighted adjacency.

    Out-transition probabilities are proportional to edge weights; the mass of
    nodes with no out-edges is spread uniformly.  Iteration stops when the L1
    change drops below ``tol``.
    """
    adjacency = sparse.csr_matrix(adjacency)
    n = adjacency.shape[0]
    if n == 0:
        return np.zeros(0)
    out_weight = np.asarray(adjacency.sum(axis=1)).ravel()
    dangling = out_weight == 0
    inv_out = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, out_weight))
    transition = sparse.diags(inv_out) @ adjacency

    scores = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        spread = scores @ transition
        spread += scores[dangling].sum() / n
        new = damping * spread + (1.0 - damping) / n
        if np.abs(new - scores).sum() < tol:
            return new / new.sum()
        scores = new
    raise RuntimeError(f"pagerank did not converge in {max_iter} iterations")


def hits_authority(adjacency, tol=1e-10, max_iter=1000):
    """Authority scores from the HITS mutual-reinforcement iteration."""
    adjacency = sparse.csr_matrix(adjacency)
    n = adjacency.shape[0]
    if n == 0:
        return np.zeros(0)
    if adjacency.nnz == 0:
        return np.full(n, 1.0 / n)
    auth = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        hub = adjacency @ auth
        new = adjacency.T @ hub
        norm = np.linalg.norm(new)
        if norm == 0:
            return np.full(n, 1.0 / n)
        new /= norm
        if np.abs(new - auth).sum() < tol:
            return new / new.sum()
        auth = new
    raise RuntimeError(f"hits did not converge in {max_iter} iterations")


def degree_centrality(adjacency):
    """In-degree plus out-degree edge counts, normalized to sum to one."""
    adjacency = sparse.csr_matrix(adjacency)
    n = adjacency.shape[0]
    counts = np.zeros(n)
    counts += np.asarray((adjacency != 0).sum(axis=1)).ravel()
    counts += np.asarray((adjacency != 0).sum(axis=0)).ravel()
    if counts.sum() == 0:
        return np.full(n, 1.0 / n) if n else counts
    return counts / counts.sum()


_CENTRALITY_METHODS = {
    "pagerank": pagerank,
    "hits": hits_authority,
    "degree": degree_centrality,
}


def centrality(graph, method="pagerank", **kwargs):
    """Centrality of every user in the full directed trust graph."""
    try:
        fn = _CENTRALITY_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown centrality method {method!r}") from None
    return CentralityScores(fn(directed_adjacency(graph), **kwargs), method)


@dataclass
class LeaderTable:
    """The most central member of each community.

    ``leaders[c]`` is the user index leading community c; ``labels`` is the
    per-user community assignment the table was built against.
    """

    leaders: np.ndarray
    labels: np.ndarray
    method: str

    def leader_of_user(self, user):
        return int(self.leaders[self.labels[user]])

    def user_leaders(self):
        """Per-user leader index, -1 where the user is the leader themselves."""
        out = self.leaders[self.labels].astype(np.int64)
        out[out == np.arange(len(self.labels))] = -1
        return out


def community_leaders(graph, communities, method="pagerank", **kwargs):
    """Pick each community's leader by centrality within its induced subgraph.

    The method runs on the subgraph of the directed trust graph spanned by
    the community's members; ties go to the smallest user index.  Singleton
    communities lead themselves.
    """
    try:
        fn = _CENTRALITY_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown centrality method {method!r}") from None
    adjacency = directed_adjacency(graph)
    labels = communities.labels
    leaders = np.zeros(communities.num_communities, dtype=np.int64)
    for c in range(communities.num_communities):
        members = np.flatnonzero(labels == c)
        if len(members) == 1:
            leaders[c] = members[0]
            continue
        sub = adjacency[members][:, members]
        scores = fn(sub, **kwargs)
        leaders[c] = members[int(np.argmax(scores))]
    return LeaderTable(leaders, labels, method)


@dataclass
class PropagatedTrust:
    """Indirect trust values t_hat[u][v] for pairs within the propagation horizon."""

    values: dict
    num_users: int
    decay: float
    max_depth: int

    def value(self, truster, trustee):
        """Propagated trust, or 0.0 when trustee is out of reach."""
        return self.values.get(truster, {}).get(trustee, 0.0)

    def pairs(self):
        for u, row in self.values.items():
            for v, t in row.items():
                yield u, v, t

    @property
    def num_pairs(self):
        return sum(len(row) for row in self.values.values())


def propagate_trust(graph, decay=0.8, max_depth=3):
    """Extend direct trust along short directed paths with geometric damping.

    The value for a pair at shortest-path distance d is the largest product
    of edge trusts over any shortest path, scaled by decay^(d-1); direct
    edges keep their stored value.  Pairs farther than ``max_depth`` hops (or
    unreachable) are absent.
    """
    if not 0.0 < decay <= 1.0:
        raise ValueError("decay must lie in (0, 1]")
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    values = {}
    for source in range(graph.num_users):
        nbrs = graph.neighbors(source)
        if not nbrs:
            continue
        # best path product per node at the current BFS level
        frontier = dict(nbrs)
        reached = {source}
        row = {}
        for depth in range(1, max_depth + 1):
            scale = decay ** (depth - 1)
            reached.update(frontier)
            for v, product in frontier.items():
                row[v] = product * scale
            if depth == max_depth:
                break
            nxt = {}
            for v, product in frontier.items():
                for w, t in graph.neighbors(v).items():
                    if w in reached:
                        continue
                    candidate = product * t
                    if candidate > nxt.get(w, 0.0):
                        nxt[w] = candidate
            if not nxt:
                break
            frontier = nxt
        values[source] = row
    return PropagatedTrust(values, graph.num_users, decay, max_depth)
