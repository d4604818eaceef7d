"""Node embeddings for the trust graph: biased random walks plus skip-gram.

Walks follow the second-order scheme of node2vec on the symmetrized graph:
stepping from ``cur`` after arriving from ``prev``, a candidate ``x`` is
weighted by edge weight times 1/p when x is prev itself, 1 when x is also a
neighbor of prev, and 1/q otherwise.  Each start node draws from its own
seeded generator stream, so walk generation does not depend on the order in
which nodes are processed.

The skip-gram trains input vectors against context vectors with negative
sampling from the 3/4-power unigram distribution over walk occurrences.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import expit

from .graph import symmetrized_adjacency


@dataclass
class WalkConfig:
    """Walk generation and skip-gram training knobs."""

    dimensions: int = 10
    num_walks: int = 10
    walk_length: int = 80
    p: float = 1.0
    q: float = 1.0
    window: int = 5
    negatives: int = 5
    epochs: int = 1
    learning_rate: float = 0.025
    batch_size: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.dimensions <= 0 or self.num_walks <= 0 or self.walk_length <= 0:
            raise ValueError("dimensions, num_walks, walk_length must be positive")
        if self.window <= 0 or self.negatives <= 0 or self.epochs < 0:
            raise ValueError("window and negatives must be positive, epochs nonnegative")


@dataclass
class EmbeddingTable:
    """Learned input vectors, one row per node."""

    vectors: np.ndarray

    @property
    def num_nodes(self):
        return self.vectors.shape[0]

    @property
    def dimensions(self):
        return self.vectors.shape[1]

    def vector(self, node):
        return self.vectors[node]


def step_distribution(adjacency, prev, cur, p, q):
    """Exact next-node distribution for one biased step.

    Returns (candidates, probabilities) over the neighbors of ``cur``; with
    ``prev`` None the distribution is simply edge-weight proportional.
    """
    adjacency = sparse.csr_matrix(adjacency)
    lo, hi = adjacency.indptr[cur], adjacency.indptr[cur + 1]
    candidates = adjacency.indices[lo:hi]
    weights = adjacency.data[lo:hi].astype(np.float64).copy()
    if len(candidates) == 0:
        return candidates, weights
    if prev is not None:
        plo, phi = adjacency.indptr[prev], adjacency.indptr[prev + 1]
        near_prev = np.isin(candidates, adjacency.indices[plo:phi], assume_unique=True)
        bias = np.where(near_prev, 1.0, 1.0 / q)
        bias[candidates == prev] = 1.0 / p
        weights *= bias
    return candidates, weights / weights.sum()


def _walk_from(adjacency, start, length, p, q, rng):
    walk = [start]
    prev = None
    cur = start
    for _ in range(length - 1):
        candidates, probs = step_distribution(adjacency, prev, cur, p, q)
        if len(candidates) == 0:
            break
        nxt = candidates[np.searchsorted(np.cumsum(probs), rng.random(), side="right")]
        prev, cur = cur, int(nxt)
        walk.append(cur)
    return walk


def generate_walks(graph_or_adjacency, config, nodes=None):
    """All biased walks for the graph, grouped per start node.

    Every start node with at least one neighbor gets ``num_walks`` walks of
    up to ``walk_length`` nodes, drawn from its own generator
    ``default_rng([seed, node])``.  Isolated nodes yield no walks.
    """
    if sparse.issparse(graph_or_adjacency):
        adjacency = sparse.csr_matrix(graph_or_adjacency)
    else:
        adjacency = symmetrized_adjacency(graph_or_adjacency)
    if nodes is None:
        nodes = range(adjacency.shape[0])
    degrees = np.diff(adjacency.indptr)
    walks = []
    for node in nodes:
        if degrees[node] == 0:
            continue
        rng = np.random.default_rng([config.seed, node])
        for _ in range(config.num_walks):
            walks.append(_walk_from(adjacency, node, config.walk_length, config.p, config.q, rng))
    return walks


def _walk_pairs(walks, window):
    """(center, context) index pairs from every walk under a fixed window."""
    centers, contexts = [], []
    for walk in walks:
        arr = np.asarray(walk)
        n = len(arr)
        for offset in range(1, window + 1):
            if n <= offset:
                break
            centers.append(arr[:-offset])
            contexts.append(arr[offset:])
            # symmetric: the trailing node also predicts the leading one
            centers.append(arr[offset:])
            contexts.append(arr[:-offset])
    if not centers:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


def train_embeddings(walks, num_nodes, config):
    """Skip-gram with negative sampling over the walk corpus.

    Input vectors start uniform in [-0.5/d, 0.5/d], context vectors at zero.
    Pairs are shuffled once per epoch and processed in vectorized batches;
    the learning rate decays linearly to a tenth of its starting value over
    all batches.  Fixed seed in, identical table out.  Nodes that never
    appear in a walk come back as zero vectors.
    """
    d = config.dimensions
    rng = np.random.default_rng(config.seed)
    inputs = rng.uniform(-0.5 / d, 0.5 / d, size=(num_nodes, d))
    contexts = np.zeros((num_nodes, d))

    counts = np.zeros(num_nodes)
    for walk in walks:
        counts += np.bincount(walk, minlength=num_nodes)
    unvisited = counts == 0
    if counts.sum() == 0:
        return EmbeddingTable(np.zeros((num_nodes, d)))
    noise = counts**0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    centers, ctxs = _walk_pairs(walks, config.window)
    if len(centers) == 0:
        inputs[unvisited] = 0.0
        return EmbeddingTable(inputs)
    # A batch much larger than the vocabulary piles many accumulated updates
    # onto the same rows in one step and can diverge; cap it accordingly.
    active = int((counts > 0).sum())
    batch_size = min(config.batch_size, max(16, active))
    total_batches = config.epochs * int(np.ceil(len(centers) / batch_size))
    batch_idx = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(centers))
        for start in range(0, len(order), batch_size):
            sel = order[start : start + batch_size]
            lr = config.learning_rate * (1.0 - 0.9 * batch_idx / max(total_batches - 1, 1))
            batch_idx += 1
            c = centers[sel]
            o = ctxs[sel]
            negs = np.searchsorted(noise_cdf, rng.random((len(sel), config.negatives)))

            u = inputs[c]
            v_pos = contexts[o]
            v_neg = contexts[negs]
            g_pos = expit((u * v_pos).sum(axis=1)) - 1.0
            g_neg = expit(np.einsum("bd,bkd->bk", u, v_neg))

            grad_u = g_pos[:, None] * v_pos + np.einsum("bk,bkd->bd", g_neg, v_neg)
            np.add.at(inputs, c, -lr * grad_u)
            np.add.at(contexts, o, -lr * (g_pos[:, None] * u))
            np.add.at(
                contexts,
                negs.ravel(),
                (-lr * (g_neg[:, :, None] * u[:, None, :])).reshape(-1, d),
            )
    inputs[unvisited] = 0.0
    return EmbeddingTable(inputs)


def node_embeddings(graph, config):
    """Walks plus skip-gram in one call; rows of the result align with users."""
    walks = generate_walks(graph, config)
    return train_embeddings(walks, graph.num_users, config)


def cosine_similarity(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))
