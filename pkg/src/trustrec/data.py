"""Rating and trust-network ingestion, id mapping, and train/test splitting.

File formats are plain text, one record per line, comma- or
whitespace-separated.  Lines starting with ``#`` are comments.

    ratings file:  user_id, item_id, rating
    trust file:    truster_id, trustee_id[, value]     (value defaults to 1.0)
    id-map file:   external_id, internal_index
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse


class DataFormatError(ValueError):
    """A malformed or out-of-range input line; carries file path and line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class IdMap:
    """Bidirectional map between external integer ids and dense zero-based indices.

    Indices are assigned in order of first appearance, so re-reading the same
    file always produces the same mapping.
    """

    def __init__(self):
        self._index = {}
        self._ids = []

    def __len__(self):
        return len(self._ids)

    def __contains__(self, external_id):
        return external_id in self._index

    def add(self, external_id):
        """Return the index for ``external_id``, allocating a new one if unseen."""
        idx = self._index.get(external_id)
        if idx is None:
            idx = len(self._ids)
            self._index[external_id] = idx
            self._ids.append(external_id)
        return idx

    def index_of(self, external_id):
        return self._index[external_id]

    def id_of(self, index):
        return self._ids[index]

    def save(self, path):
        with open(path, "w") as fh:
            for idx, ext in enumerate(self._ids):
                fh.write(f"{ext},{idx}\n")

    @classmethod
    def load(cls, path):
        mapping = cls()
        for line_no, fields in _records(path):
            if len(fields) != 2:
                raise DataFormatError(path, line_no, "expected 'external_id,internal_index'")
            ext, idx = int(fields[0]), int(fields[1])
            if idx != len(mapping._ids):
                raise DataFormatError(path, line_no, f"non-contiguous index {idx}")
            mapping.add(ext)
        return mapping


@dataclass
class RatingMatrix:
    """Sparse user x item rating matrix with an implicit observation mask.

    Entries are stored as three parallel arrays sorted by (user, item); a pair
    appears at most once, and a stored pair is exactly an observed rating.
    """

    num_users: int
    num_items: int
    users: np.ndarray
    items: np.ndarray
    values: np.ndarray
    r_min: float = 1.0
    r_max: float = 5.0

    def __len__(self):
        return len(self.values)

    def __post_init__(self):
        self.users = np.asarray(self.users, dtype=np.int64)
        self.items = np.asarray(self.items, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)

    def validate(self):
        if len(self.users) != len(self.items) or len(self.users) != len(self.values):
            raise ValueError("entry arrays must have equal length")
        if len(self.users):
            if self.users.min() < 0 or self.users.max() >= self.num_users:
                raise ValueError("user index out of range")
            if self.items.min() < 0 or self.items.max() >= self.num_items:
                raise ValueError("item index out of range")
            if self.values.min() < self.r_min or self.values.max() > self.r_max:
                raise ValueError("rating outside scale")
            pairs = self.users * self.num_items + self.items
            if len(np.unique(pairs)) != len(pairs):
                raise ValueError("duplicate (user, item) pair")
        return self

    def with_num_users(self, num_users):
        """Copy with a widened user index space (entries unchanged)."""
        if num_users < self.num_users:
            raise ValueError("cannot shrink the user space")
        return replace(self, num_users=num_users)

    def to_csr(self):
        """Users-by-items scipy CSR matrix of the stored ratings."""
        return sparse.csr_matrix(
            (self.values, (self.users, self.items)),
            shape=(self.num_users, self.num_items),
        )

    def user_counts(self):
        """Number of stored ratings per user, shape (num_users,)."""
        return np.bincount(self.users, minlength=self.num_users)

    def item_counts(self):
        return np.bincount(self.items, minlength=self.num_items)


@dataclass
class SplitSpec:
    """Deterministic train/test partition parameters."""

    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


class TrustGraph:
    """Directed user-to-user trust edges with values in (0, 1].

    Neighbor dicts preserve insertion order, so a graph rebuilt from the same
    edge sequence is structurally identical.  ``self_loops_skipped`` counts
    input lines dropped because truster == trustee.
    """

    def __init__(self, num_users, self_loops_skipped=0):
        self.num_users = num_users
        self.out_edges = {}
        self.self_loops_skipped = self_loops_skipped
        self._num_edges = 0

    def add_edge(self, truster, trustee, value=1.0):
        if truster == trustee:
            raise ValueError("self-loops are not allowed")
        if not 0.0 < value <= 1.0:
            raise ValueError(f"trust value {value} outside (0, 1]")
        if truster >= self.num_users or trustee >= self.num_users or truster < 0 or trustee < 0:
            raise ValueError("endpoint index out of range")
        nbrs = self.out_edges.setdefault(truster, {})
        if trustee not in nbrs:
            self._num_edges += 1
        nbrs[trustee] = value

    @property
    def num_edges(self):
        return self._num_edges

    def trust(self, truster, trustee):
        """Stored direct trust value, or None when no edge exists."""
        return self.out_edges.get(truster, {}).get(trustee)

    def neighbors(self, user):
        return self.out_edges.get(user, {})

    def edges(self):
        for u, nbrs in self.out_edges.items():
            for v, t in nbrs.items():
                yield u, v, t

    def degrees(self):
        """Out-degree plus in-degree counts per user, shape (num_users,)."""
        deg = np.zeros(self.num_users, dtype=np.int64)
        for u, v, _ in self.edges():
            deg[u] += 1
            deg[v] += 1
        return deg


def _records(path):
    """Yield (line_no, fields) for every non-comment, non-blank line."""
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield line_no, line.replace(",", " ").split()


def load_ratings(path, scale=(1.0, 5.0), user_map=None, item_map=None):
    """Read a ratings file into a RatingMatrix with contiguous zero-based indices.

    Duplicate (user, item) lines are resolved by keeping the last one.  When
    id maps are supplied they are extended in place, which keeps the index
    space shared with a trust file loaded through the same user map.
    """
    r_min, r_max = float(scale[0]), float(scale[1])
    user_map = IdMap() if user_map is None else user_map
    item_map = IdMap() if item_map is None else item_map
    entries = {}
    for line_no, fields in _records(path):
        if len(fields) != 3:
            raise DataFormatError(path, line_no, f"expected 'user,item,rating', got {len(fields)} fields")
        try:
            ext_u, ext_i, value = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError as exc:
            raise DataFormatError(path, line_no, str(exc)) from None
        if not r_min <= value <= r_max:
            raise DataFormatError(path, line_no, f"rating {value} outside [{r_min}, {r_max}]")
        entries[(user_map.add(ext_u), item_map.add(ext_i))] = value
    return _matrix_from_entries(entries, len(user_map), len(item_map), r_min, r_max)


def _matrix_from_entries(entries, num_users, num_items, r_min, r_max):
    if entries:
        keys = np.array(sorted(entries), dtype=np.int64)
        users, items = keys[:, 0], keys[:, 1]
        values = np.array([entries[(u, i)] for u, i in keys], dtype=np.float64)
    else:
        users = items = np.zeros(0, dtype=np.int64)
        values = np.zeros(0, dtype=np.float64)
    return RatingMatrix(num_users, num_items, users, items, values, r_min, r_max)


def save_ratings(matrix, path, user_map, item_map):
    """Write a RatingMatrix back to the external text format."""
    with open(path, "w") as fh:
        for u, i, v in zip(matrix.users, matrix.items, matrix.values):
            fh.write(f"{user_map.id_of(u)},{item_map.id_of(i)},{float(v)!r}\n")


def load_trust(path, user_map):
    """Read a trust file into a TrustGraph over the user map's index space.

    Users that appear only in the trust file are appended to ``user_map``.
    Self-loop lines are skipped and counted, not errors.
    """
    parsed = []
    skipped = 0
    for line_no, fields in _records(path):
        if len(fields) not in (2, 3):
            raise DataFormatError(path, line_no, f"expected 'truster,trustee[,value]', got {len(fields)} fields")
        try:
            ext_u, ext_v = int(fields[0]), int(fields[1])
            value = float(fields[2]) if len(fields) == 3 else 1.0
        except ValueError as exc:
            raise DataFormatError(path, line_no, str(exc)) from None
        if ext_u == ext_v:
            skipped += 1
            continue
        if not 0.0 < value <= 1.0:
            raise DataFormatError(path, line_no, f"trust value {value} outside (0, 1]")
        parsed.append((user_map.add(ext_u), user_map.add(ext_v), value))
    graph = TrustGraph(len(user_map), self_loops_skipped=skipped)
    for u, v, t in parsed:
        graph.add_edge(u, v, t)
    return graph


def save_trust(graph, path, user_map):
    """Write a TrustGraph back to the external text format."""
    with open(path, "w") as fh:
        for u, v, t in graph.edges():
            fh.write(f"{user_map.id_of(u)},{user_map.id_of(v)},{float(t)!r}\n")


def split(ratings, spec):
    """Partition the stored ratings into train/test matrices.

    The split is uniform over entries: round(train_fraction * total) of them
    land in train, the rest in test, chosen by a seeded shuffle of the
    canonical (user, item) entry order.  Identical inputs give identical
    partitions.
    """
    total = len(ratings)
    if total == 0:
        raise ValueError("cannot split an empty rating matrix")
    n_train = int(round(spec.train_fraction * total))
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(total)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])

    def take(idx):
        return replace(
            ratings,
            users=ratings.users[idx],
            items=ratings.items[idx],
            values=ratings.values[idx],
        )

    return take(train_idx), take(test_idx)


def global_mean(ratings):
    """Arithmetic mean of all stored ratings."""
    if len(ratings) == 0:
        raise ValueError("rating matrix has no entries")
    return float(ratings.values.mean())


def subsample_top_trust_users(ratings, graph, count):
    """Restrict a dataset to the ``count`` users of highest trust degree.

    Degree is out-degree plus in-degree in the trust graph; degree ties break
    toward the smaller user index.  Keeps every rating of the selected users
    and every trust edge between two of them, reindexing users to 0..count-1
    in original index order.  Items are left unchanged.

    Returns (ratings, graph, kept) where kept maps new indices to old.
    """
    if count <= 0 or count > ratings.num_users:
        raise ValueError("count must lie in [1, num_users]")
    degrees = graph.degrees()
    order = np.lexsort((np.arange(len(degrees)), -degrees))
    kept = np.sort(order[:count])
    new_index = np.full(ratings.num_users, -1, dtype=np.int64)
    new_index[kept] = np.arange(count)

    mask = new_index[ratings.users] >= 0
    sub_ratings = replace(
        ratings,
        num_users=count,
        users=new_index[ratings.users[mask]],
        items=ratings.items[mask],
        values=ratings.values[mask],
    )
    sub_graph = TrustGraph(count)
    for u, v, t in graph.edges():
        if new_index[u] >= 0 and new_index[v] >= 0:
            sub_graph.add_edge(int(new_index[u]), int(new_index[v]), t)
    return sub_ratings, sub_graph, kept
