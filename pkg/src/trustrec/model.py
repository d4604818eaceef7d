"""The combined factor model: prediction, objective, gradients, SGD training.

A rating is predicted as (P_u + W ⊙ X_u)ᵀ Q_i, with P and Q the user and
item factor matrices, X_u a fixed node embedding of the user, and W a
learned elementwise weight vector of the embedded factors.  The training
objective augments squared reconstruction error and ridge penalties with two
social terms: propagated-trust smoothing, which pulls the factors of trusting
pairs together in proportion to their trust value, and a community term that
pulls every member toward its community leader.

Factor matrices are stored factors-first: P has shape (k, num_users) and
Q has shape (k, num_items), so P[:, u] is user u's vector.
"""

from dataclasses import dataclass, field

import numpy as np

from .serialize import load_checkpoint, save_checkpoint


@dataclass
class ModelParams:
    """Learned parameters; all arrays are float64 and finite."""

    P: np.ndarray
    Q: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        self.Q = np.asarray(self.Q, dtype=np.float64)
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.P.ndim != 2 or self.Q.ndim != 2 or self.W.ndim != 1:
            raise ValueError("P and Q must be matrices, W a vector")
        if not (self.P.shape[0] == self.Q.shape[0] == self.W.shape[0]):
            raise ValueError("P, Q, W disagree on the factor dimension")

    @property
    def k(self):
        return self.P.shape[0]

    @property
    def num_users(self):
        return self.P.shape[1]

    @property
    def num_items(self):
        return self.Q.shape[1]

    def copy(self):
        return ModelParams(self.P.copy(), self.Q.copy(), self.W.copy())


@dataclass
class HyperParams:
    """Factor count, SGD step size, and the five regularization strengths."""

    k: int = 10
    learning_rate: float = 0.005
    lam_p: float = 0.1
    lam_q: float = 0.1
    lam_w: float = 0.1
    lam_t: float = 0.1
    lam_c: float = 0.1
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in ("lam_p", "lam_q", "lam_w", "lam_t", "lam_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")


@dataclass
class TrainingContext:
    """Everything training needs besides the parameters themselves.

    ``trust``, ``embeddings``, ``communities``, and ``leaders`` may each be
    None, which disables the corresponding objective term; this is how the
    ablation variants are expressed.
    """

    train: "RatingMatrix"
    trust: "PropagatedTrust" = None
    embeddings: "EmbeddingTable" = None
    communities: "CommunityAssignment" = None
    leaders: "LeaderTable" = None

    def validate(self):
        m = self.train.num_users
        if self.trust is not None and self.trust.num_users != m:
            raise ValueError("trust and ratings disagree on the user count")
        if self.embeddings is not None and self.embeddings.num_nodes != m:
            raise ValueError("embeddings and ratings disagree on the user count")
        if self.communities is not None and len(self.communities.labels) != m:
            raise ValueError("communities and ratings disagree on the user count")
        if self.leaders is not None and len(self.leaders.labels) != m:
            raise ValueError("leaders and ratings disagree on the user count")
        return self


class _Tables:
    """Flat-array views of a TrainingContext for the inner loops.

    Trust partners of u concatenate both directions: pairs (u, v) where u
    trusts v and pairs (w, u) where w trusts u, each with its propagated
    value, since both appear in u's partial derivative.
    """

    def __init__(self, ctx, k):
        train = ctx.train
        m, n = train.num_users, train.num_items
        self.user_counts = train.user_counts()
        self.item_counts = train.item_counts()
        self.inv_user = 1.0 / np.maximum(self.user_counts, 1)
        self.inv_item = 1.0 / np.maximum(self.item_counts, 1)

        if ctx.embeddings is not None:
            if ctx.embeddings.dimensions != k:
                raise ValueError("embedding dimension must equal k")
            self.X = np.asarray(ctx.embeddings.vectors, dtype=np.float64)
        else:
            self.X = np.zeros((m, k))

        # Directed propagated pairs, for the objective.
        if ctx.trust is not None and ctx.trust.num_pairs:
            pu, pv, pt = zip(*ctx.trust.pairs())
            self.pair_u = np.array(pu, dtype=np.int64)
            self.pair_v = np.array(pv, dtype=np.int64)
            self.pair_t = np.array(pt, dtype=np.float64)
        else:
            self.pair_u = np.zeros(0, dtype=np.int64)
            self.pair_v = np.zeros(0, dtype=np.int64)
            self.pair_t = np.zeros(0, dtype=np.float64)

        # Per-user partner lists over both directions, for the gradients.
        both_u = np.concatenate([self.pair_u, self.pair_v])
        both_p = np.concatenate([self.pair_v, self.pair_u])
        both_t = np.concatenate([self.pair_t, self.pair_t])
        order = np.argsort(both_u, kind="stable")
        self.t_indptr = np.searchsorted(both_u[order], np.arange(m + 1))
        self.t_partners = both_p[order]
        self.t_values = both_t[order]
        self.t_total = np.bincount(both_u, weights=both_t, minlength=m)

        # leaders[u] = -1 when u leads its own community (or there are none)
        if ctx.leaders is not None:
            self.user_leaders = ctx.leaders.user_leaders()
        else:
            self.user_leaders = np.full(m, -1, dtype=np.int64)
        members = np.flatnonzero(self.user_leaders >= 0)
        heads = self.user_leaders[members]
        order = np.argsort(heads, kind="stable")
        self.f_indptr = np.searchsorted(heads[order], np.arange(m + 1))
        self.f_members = members[order]


def _check_index(value, bound, what):
    if not 0 <= value < bound:
        raise IndexError(f"{what} {value} out of range [0, {bound})")


def predict(params, embeddings, u, i):
    """Raw predicted rating (P_u + W ⊙ X_u)ᵀ Q_i, not clamped to the scale.

    Clamping belongs to evaluation; training gradients need the raw value.
    With no embedding table the prediction reduces to P_uᵀQ_i.
    """
    _check_index(u, params.num_users, "user")
    _check_index(i, params.num_items, "item")
    a = params.P[:, u]
    if embeddings is not None:
        a = a + params.W * embeddings.vector(u)
    return float(a @ params.Q[:, i])


def predict_entries(params, tables_or_ctx, users, items):
    """Vectorized raw predictions for parallel index arrays."""
    tables = tables_or_ctx if isinstance(tables_or_ctx, _Tables) else _Tables(tables_or_ctx, params.k)
    a = params.P[:, users] + params.W[:, None] * tables.X[users].T
    return (a * params.Q[:, items]).sum(axis=0)


def objective(params, ctx, hp, tables=None):
    """Full training objective over the context's train split.

    Squared-error term plus ridge penalties on P, Q, W, the propagated-trust
    smoothing term over directed trust pairs, and the community-leader term
    over non-leader members.
    """
    tables = tables or _Tables(ctx.validate(), hp.k)
    train = ctx.train
    err = predict_entries(params, tables, train.users, train.items) - train.values
    total = 0.5 * err @ err
    total += 0.5 * hp.lam_p * (params.P * params.P).sum()
    total += 0.5 * hp.lam_q * (params.Q * params.Q).sum()
    total += 0.5 * hp.lam_w * params.W @ params.W
    if len(tables.pair_u):
        diff = params.P[:, tables.pair_u] - params.P[:, tables.pair_v]
        total += 0.5 * hp.lam_t * (tables.pair_t * (diff * diff).sum(axis=0)).sum()
    members = np.flatnonzero(tables.user_leaders >= 0)
    if len(members):
        diff = params.P[:, members] - params.P[:, tables.user_leaders[members]]
        total += 0.5 * hp.lam_c * (diff * diff).sum()
    return float(total)


def gradients(params, ctx, hp, tables=None):
    """Exact analytic gradient of the objective, as a ModelParams-shaped triple."""
    tables = tables or _Tables(ctx.validate(), hp.k)
    train = ctx.train
    users, items = train.users, train.items
    Xg = tables.X[users].T
    a = params.P[:, users] + params.W[:, None] * Xg
    err = (a * params.Q[:, items]).sum(axis=0) - train.values

    gP = np.zeros((params.num_users, params.k))
    np.add.at(gP, users, (err * params.Q[:, items]).T)
    gP = gP.T + hp.lam_p * params.P

    gQ = np.zeros((params.num_items, params.k))
    np.add.at(gQ, items, (err * a).T)
    gQ = gQ.T + hp.lam_q * params.Q

    gW = (Xg * params.Q[:, items]) @ err + hp.lam_w * params.W

    if len(tables.pair_u):
        diff = hp.lam_t * tables.pair_t * (params.P[:, tables.pair_u] - params.P[:, tables.pair_v])
        scatter = np.zeros((params.num_users, params.k))
        np.add.at(scatter, tables.pair_u, diff.T)
        np.add.at(scatter, tables.pair_v, -diff.T)
        gP += scatter.T
    members = np.flatnonzero(tables.user_leaders >= 0)
    if len(members):
        diff = hp.lam_c * (params.P[:, members] - params.P[:, tables.user_leaders[members]])
        scatter = np.zeros((params.num_users, params.k))
        np.add.at(scatter, members, diff.T)
        np.add.at(scatter, tables.user_leaders[members], -diff.T)
        gP += scatter.T
    return gP, gQ, gW


def sgd_epoch(params, ctx, hp, rng=None, tables=None):
    """One pass of per-rating SGD in a seeded shuffled order; returns new params.

    Each visit updates P_u, Q_i, and W from the gradients at the current
    values.  Regularization is spread across visits so that an epoch's
    summed regularizer gradient matches the full objective: the P-ridge,
    trust, and leader terms for user u are scaled by 1/|ratings of u|, the
    Q-ridge for item i by 1/|ratings of i|, and the W-ridge by 1/N.
    """
    tables = tables or _Tables(ctx.validate(), hp.k)
    rng = rng if rng is not None else np.random.default_rng(hp.seed)
    out = params.copy()
    P, Q, W = out.P, out.Q, out.W
    train = ctx.train
    users, items, values = train.users, train.items, train.values
    X = tables.X
    inv_u, inv_i = tables.inv_user, tables.inv_item
    t_indptr, t_partners, t_values, t_total = (
        tables.t_indptr,
        tables.t_partners,
        tables.t_values,
        tables.t_total,
    )
    leaders, f_indptr, f_members = tables.user_leaders, tables.f_indptr, tables.f_members
    lr = hp.learning_rate
    lam_w_n = hp.lam_w / len(values)

    for s in rng.permutation(len(values)):
        u, i, r = users[s], items[s], values[s]
        pu = P[:, u]
        qi = Q[:, i]
        xu = X[u]
        wxu = W * xu
        a = pu + wxu
        e = a @ qi - r
        cu = inv_u[u]

        gp = e * qi + (hp.lam_p * cu) * pu
        lo, hi = t_indptr[u], t_indptr[u + 1]
        if hi > lo:
            gp += (hp.lam_t * cu) * (t_total[u] * pu - P[:, t_partners[lo:hi]] @ t_values[lo:hi])
        head = leaders[u]
        if head >= 0:
            gp += (hp.lam_c * cu) * (pu - P[:, head])
        lo, hi = f_indptr[u], f_indptr[u + 1]
        if hi > lo:
            gp += (hp.lam_c * cu) * ((hi - lo) * pu - P[:, f_members[lo:hi]].sum(axis=1))

        gq = e * a + (hp.lam_q * inv_i[i]) * qi
        gw = e * (xu * qi) + lam_w_n * W

        pu -= lr * gp
        qi -= lr * gq
        W -= lr * gw
    return out


def init_params(num_users, num_items, hp, rng=None):
    """Random small-normal initialization for P and Q; W starts at zero."""
    rng = rng if rng is not None else np.random.default_rng(hp.seed)
    return ModelParams(
        rng.normal(0.0, 0.1, size=(hp.k, num_users)),
        rng.normal(0.0, 0.1, size=(hp.k, num_items)),
        np.zeros(hp.k),
    )


def train(ctx, hp, init_P, init_Q):
    """Run SGD epochs from the given initialization, keeping the best params.

    ``init_P``/``init_Q`` are (k, num_users) and (k, num_items) matrices,
    typically autoencoder codes; W always starts at zero.  The full objective
    is recorded after every epoch, and training stops early once it has risen
    five epochs in a row.  Returns (best params, objective history).
    """
    ctx.validate()
    init_P = np.asarray(init_P, dtype=np.float64)
    init_Q = np.asarray(init_Q, dtype=np.float64)
    m, n = ctx.train.num_users, ctx.train.num_items
    if init_P.shape != (hp.k, m):
        raise ValueError(f"init_P shape {init_P.shape}, expected {(hp.k, m)}")
    if init_Q.shape != (hp.k, n):
        raise ValueError(f"init_Q shape {init_Q.shape}, expected {(hp.k, n)}")

    tables = _Tables(ctx, hp.k)
    params = ModelParams(init_P.copy(), init_Q.copy(), np.zeros(hp.k))
    rng = np.random.default_rng(hp.seed)
    history = []
    best = params.copy()
    best_value = objective(params, ctx, hp, tables)
    rising = 0
    for _ in range(hp.epochs):
        params = sgd_epoch(params, ctx, hp, rng, tables)
        value = objective(params, ctx, hp, tables)
        if history and value > history[-1]:
            rising += 1
        else:
            rising = 0
        history.append(value)
        if value < best_value:
            best_value = value
            best = params.copy()
        if rising >= 5:
            break
    return best, history


def save_params(params, path):
    save_checkpoint(
        path,
        "model",
        {"P": params.P, "Q": params.Q, "W": params.W},
        {"k": params.k, "m": params.num_users, "n": params.num_items},
    )


def load_params(path):
    _, arrays, _ = load_checkpoint(path, expect_kind="model")
    return ModelParams(arrays["P"], arrays["Q"], arrays["W"])
