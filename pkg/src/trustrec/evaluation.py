"""Held-out RMSE evaluation, baselines, and the ablation ladder."""

from dataclasses import dataclass, replace

import numpy as np

from . import autoencoder as ae
from .model import TrainingContext, init_params, train


def rmse(pairs):
    """Root mean square error over (actual, predicted) pairs.

    sqrt(sum of squared residuals / N); the list must be non-empty.
    """
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("rmse needs at least one pair")
    arr = arr.reshape(-1, 2)
    residuals = arr[:, 0] - arr[:, 1]
    return float(np.sqrt(residuals @ residuals / len(residuals)))


@dataclass
class EvalReport:
    """One evaluation result: which model, on how many pairs, scoring what."""

    model_tag: str
    rmse: float
    num_pairs: int
    seed: int
    config: dict = None

    def line(self):
        return f"{self.model_tag}\t{self.rmse!r}\t{self.num_pairs}\t{self.seed}"

    @classmethod
    def from_line(cls, text):
        tag, value, n, seed = text.rstrip("\n").split("\t")
        return cls(tag, float(value), int(n), int(seed))


def _raw_predictions(params, embeddings, users, items):
    """Predictions with out-of-range users/items contributing zero factors."""
    preds = np.zeros(len(users))
    known = (users < params.num_users) & (items < params.num_items)
    u, i = users[known], items[known]
    a = params.P[:, u]
    if embeddings is not None:
        a = a + params.W[:, None] * embeddings.vectors[u].T
    preds[known] = (a * params.Q[:, i]).sum(axis=0)
    return preds


def evaluate(params, embeddings, test, model_tag="model", seed=0, config=None):
    """Clamped-prediction RMSE of a trained model on a held-out split.

    Predictions are clipped to the rating scale before scoring.  Users or
    items beyond the trained shapes predict zero pre-clamp rather than
    raising, so cold entries degrade gracefully.
    """
    if len(test) == 0:
        raise ValueError("test split is empty")
    preds = _raw_predictions(params, embeddings, test.users, test.items)
    preds = np.clip(preds, test.r_min, test.r_max)
    residuals = test.values - preds
    value = float(np.sqrt(residuals @ residuals / len(residuals)))
    return EvalReport(model_tag, value, len(test), seed, config)


def constant_baseline(value, test, model_tag="constant"):
    """RMSE of predicting one clamped constant (such as the train mean) everywhere."""
    if len(test) == 0:
        raise ValueError("test split is empty")
    pred = min(max(value, test.r_min), test.r_max)
    residuals = test.values - pred
    score = float(np.sqrt(residuals @ residuals / len(residuals)))
    return EvalReport(model_tag, score, len(test), 0)


ABLATION_TAGS = ("mf", "mf+ae", "mf+ae+trust", "mf+ae+trust+leader", "full")


def autoencoder_inits(train_split, k, user_config, item_config):
    """Pretrain both autoencoders and return (init_P, init_Q) code matrices.

    The user stack reconstructs rating rows, the item stack rating columns;
    the code layers (width k) become the factor initializations.
    """
    targets, mask = ae.rating_arrays(train_split, axis="users")
    user_model = ae.train_autoencoder(targets, mask, user_config)
    init_P = ae.encode(user_model, targets, mask).T
    targets, mask = ae.rating_arrays(train_split, axis="items")
    item_model = ae.train_autoencoder(targets, mask, item_config)
    init_Q = ae.encode(item_model, targets, mask).T
    if init_P.shape[0] != k or init_Q.shape[0] != k:
        raise ValueError(f"autoencoder code width {init_P.shape[0]} does not match k={k}")
    return init_P, init_Q


def run_ablations(ctx, hp, test, ae_init=None):
    """Train and score the five-variant ladder on one shared split.

    Variants add one ingredient at a time: plain randomly initialized MF,
    then autoencoder initialization, the trust term, the leader term, and
    finally the embedding pathway.  When ``ae_init`` is None the autoencoder
    variants fall back to the random initialization, so the ladder still runs
    (and reports the degenerate comparison) without pretraining.
    """
    ctx.validate()
    m, n = ctx.train.num_users, ctx.train.num_items
    base = init_params(m, n, hp)
    random_init = (base.P, base.Q)
    ae_init = ae_init or random_init

    variants = (
        (ABLATION_TAGS[0], random_init, replace(ctx, trust=None, embeddings=None, communities=None, leaders=None)),
        (ABLATION_TAGS[1], ae_init, replace(ctx, trust=None, embeddings=None, communities=None, leaders=None)),
        (ABLATION_TAGS[2], ae_init, replace(ctx, embeddings=None, communities=None, leaders=None)),
        (ABLATION_TAGS[3], ae_init, replace(ctx, embeddings=None)),
        (ABLATION_TAGS[4], ae_init, ctx),
    )
    reports = []
    for tag, (init_P, init_Q), variant_ctx in variants:
        params, _ = train(variant_ctx, hp, init_P, init_Q)
        reports.append(
            evaluate(params, variant_ctx.embeddings, test, model_tag=tag, seed=hp.seed)
        )
    return reports


def write_reports(reports, path):
    """One tab-separated record per line: tag, rmse, N, seed."""
    with open(path, "w") as fh:
        for report in reports:
            fh.write(report.line() + "\n")


def read_reports(path):
    with open(path) as fh:
        return [EvalReport.from_line(line) for line in fh if line.strip()]
